use crate::bits::BitVec;
use crate::code::LinearCode;
use crate::error::{Error, Result};
use crate::eval::{Decoder, Frame};
use crate::code::MAX_ENUMERATION_K;
use crate::mld::{default_order, mld_exhaustive, osd_decode};

pub struct OsdDecoder {
    code: LinearCode,
    order: usize,
    name: String,
}

impl OsdDecoder {
    pub fn new(code: &LinearCode, order: Option<usize>) -> Result<Self> {
        let order = order.unwrap_or_else(|| default_order(code));
        if order > code.k() {
            return Err(Error::InvalidParameter(format!(
                "OSD order {order} exceeds k = {}",
                code.k()
            )));
        }
        Ok(Self {
            code: code.clone(),
            order,
            name: format!("osd-{order}"),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

impl Decoder for OsdDecoder {
    fn name(&self) -> &str {
        &self.name
    }

    fn decode(&self, frame: &Frame<'_>) -> Result<BitVec> {
        Ok(osd_decode(&self.code, frame.rx, self.order)?.error_pattern.into_bits())
    }
}

pub struct MldDecoder {
    code: LinearCode,
}

impl MldDecoder {
    pub fn new(code: &LinearCode) -> Result<Self> {
        if code.k() > MAX_ENUMERATION_K {
            return Err(Error::EnumerationBound {
                k: code.k(),
                max: MAX_ENUMERATION_K,
            });
        }
        Ok(Self { code: code.clone() })
    }
}

impl Decoder for MldDecoder {
    fn name(&self) -> &str {
        "mld"
    }

    fn decode(&self, frame: &Frame<'_>) -> Result<BitVec> {
        Ok(mld_exhaustive(&self.code, frame.rx)?.error_pattern.into_bits())
    }
}

/// Always estimates the all-zero error pattern, i.e. trusts the hard
/// decision.
pub struct HardDecisionDecoder {
    n: usize,
}

impl HardDecisionDecoder {
    pub fn new(code: &LinearCode) -> Self {
        Self { n: code.n() }
    }
}

impl Decoder for HardDecisionDecoder {
    fn name(&self) -> &str {
        "hard"
    }

    fn decode(&self, _: &Frame<'_>) -> Result<BitVec> {
        Ok(BitVec::zeros(self.n))
    }
}
