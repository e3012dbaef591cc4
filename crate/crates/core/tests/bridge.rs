use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use sbnd_core::code::bch_code;
use sbnd_core::eval::{run_fer, serve_bridge, BridgeDecoder, BridgeEndpoint, HardDecisionDecoder, OsdDecoder, StopRule};
use sbnd_core::mld::osd_error_from_syndrome;
use sbnd_core::{default_order, Error, LinearCode};

/// Serves one connection on an ephemeral port with `handler`.
fn peer<F>(handler: F) -> BridgeEndpoint
where
    F: FnOnce(std::net::TcpStream) + Send + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        stream.set_nodelay(true).unwrap();
        handler(stream);
    });
    BridgeEndpoint::Tcp(addr.to_string())
}

fn osd_peer(code: &LinearCode) -> BridgeEndpoint {
    let code = code.clone();
    peer(move |stream| {
        let order = default_order(&code);
        let reader = BufReader::new(stream.try_clone().unwrap());
        let _ = serve_bridge(&code, reader, stream, |rel, s| osd_error_from_syndrome(&code, s, rel, order));
    })
}

/// Answers every request with `reply(n)` as the pattern line.
fn scripted_peer(reply: fn(usize) -> String) -> BridgeEndpoint {
    peer(move |stream| {
        let mut out = stream.try_clone().unwrap();
        let mut lines = BufReader::new(stream).lines();
        while let Some(Ok(header)) = lines.next() {
            let w: Vec<&str> = header.split_whitespace().collect();
            let (id, n): (u64, usize) = (w[1].parse().unwrap(), w[2].parse().unwrap());
            lines.next();
            lines.next();
            let msg = format!("EPAT {id}\n{}\n", reply(n));
            if out.write_all(msg.as_bytes()).is_err() {
                break;
            }
        }
    })
}

const STOP: StopRule = StopRule {
    min_frame_errors: 60,
    max_frames: 500_000,
};

#[test]
fn loopback_osd_reproduces_native_fer() {
    let code = bch_code(5, 2).unwrap();
    let native = run_fer(&OsdDecoder::new(&code, None).unwrap(), &code, &[3.0], STOP, 31).unwrap();
    let bridge = BridgeDecoder::connect(&code, &osd_peer(&code), Duration::from_secs(10)).unwrap();
    let remote = run_fer(&bridge, &code, &[3.0], STOP, 31).unwrap();
    let (a, b) = (&native[0], &remote[0]);
    assert_eq!(a.frames, b.frames);
    let se = a.fer_std_error().max(b.fer_std_error());
    assert!((a.fer - b.fer).abs() <= 3.0 * se, "native {} bridge {}", a.fer, b.fer);
}

#[test]
fn zero_stub_behaves_as_hard_decision() {
    let code = bch_code(4, 2).unwrap();
    let stub = scripted_peer(|n| "0".repeat(n));
    let bridge = BridgeDecoder::connect(&code, &stub, Duration::from_secs(10)).unwrap();
    let remote = run_fer(&bridge, &code, &[2.0], STOP, 2).unwrap();
    let local = run_fer(&HardDecisionDecoder::new(&code), &code, &[2.0], STOP, 2).unwrap();
    assert_eq!(remote, local);
}

#[cfg(unix)]
#[test]
fn spawned_peer_speaks_over_pipes() {
    let code = bch_code(4, 2).unwrap();
    let script = r#"while read h; do read f; read s; set -- $h; echo "EPAT $2"; echo "0 0 0 0 0 0 0 0 0 0 0 0 0 0 0"; done"#;
    let endpoint = BridgeEndpoint::Command {
        program: "sh".into(),
        args: vec!["-c".into(), script.into()],
    };
    let bridge = BridgeDecoder::connect(&code, &endpoint, Duration::from_secs(10)).unwrap();
    let stop = StopRule {
        min_frame_errors: 20,
        max_frames: 10_000,
    };
    let remote = run_fer(&bridge, &code, &[2.0], stop, 3).unwrap();
    let local = run_fer(&HardDecisionDecoder::new(&code), &code, &[2.0], stop, 3).unwrap();
    assert_eq!(remote, local);
}

#[test]
fn short_response_names_expected_length() {
    let code = bch_code(5, 2).unwrap();
    let stub = scripted_peer(|n| "0 ".repeat(n - 1));
    let bridge = BridgeDecoder::connect(&code, &stub, Duration::from_secs(10)).unwrap();
    let err = run_fer(&bridge, &code, &[3.0], STOP, 1).unwrap_err();
    assert!(matches!(err.root(), Error::Protocol { .. }), "{err}");
    assert!(err.to_string().contains("expected 31"), "{err}");
    assert!(err.to_string().contains("seed 1"), "{err}");
}

#[test]
fn silent_peer_times_out() {
    let code = bch_code(4, 2).unwrap();
    let stub = peer(|stream| {
        let mut lines = BufReader::new(stream).lines();
        while let Some(Ok(_)) = lines.next() {}
    });
    let bridge = BridgeDecoder::connect(&code, &stub, Duration::from_millis(200)).unwrap();
    let err = run_fer(&bridge, &code, &[2.0], STOP, 1).unwrap_err();
    assert!(matches!(err.root(), Error::Timeout { .. }), "{err}");
}

#[test]
fn closed_peer_is_a_protocol_error() {
    let code = bch_code(4, 2).unwrap();
    let stub = peer(drop);
    let bridge = BridgeDecoder::connect(&code, &stub, Duration::from_secs(5)).unwrap();
    let err = run_fer(&bridge, &code, &[2.0], STOP, 1).unwrap_err();
    assert!(matches!(err.root(), Error::Protocol { .. } | Error::Io(_)), "{err}");
}
