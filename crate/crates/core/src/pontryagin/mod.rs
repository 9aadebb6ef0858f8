//! Framed Pontryagin manifolds: preimage points with frames (`n = k`),
//! traced fibers (`n = k + 1`), the collapse construction, and the
//! realizability test on the line.

pub mod construct;
pub mod framing;
pub mod preimage;
pub mod realize;
pub mod trace;

pub use construct::{pt_construct, CollapseMap};
pub use framing::{
    check_regular, extract_framing, find_regular_value, framed_preimage, signed_count, standard_basis, FramedPoints,
    RegularValue,
};
pub use preimage::{preimage_points, preimage_search, PreimageSearch, SearchBox};
pub use realize::{format_signs, parse_signs, realizable_1d, realizable_1d_at, IvtCertificate, Realizability};
pub use trace::{polish_onto_fiber, sample_fiber_seeds, trace_fiber, FramedCurve, Polyline, TraceOptions};
