//! Independence: orbit independence sets, sofic independence sets, shattering and Li-Yorke scans.

mod km;
mod liyorke;
mod orbit;
mod sofic;

pub use km::{km_extract, KmMode, KmReport, TupleSet, KM_EXACT_CAP};
pub use liyorke::{li_yorke_scan, AnnulusReport, LiYorkeReport};
pub use orbit::*;
pub use sofic::*;
