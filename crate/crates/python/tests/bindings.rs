use pyo3::prelude::*;

use properclass_py::properclass_py;

fn run(code: &std::ffi::CStr) {
    Python::attach(|py| {
        if let Err(e) = py.run(code, None, None) {
            e.print(py);
            panic!("python check failed");
        }
    });
}

#[test]
fn module_round_trip() {
    pyo3::append_to_inittab!(properclass_py);
    Python::initialize();
    run(c"
import properclass_py as pc
assert pc.group_lookup(7, 3)['name'] == 'Z/12'
assert pc.winding_number(pc.SphereMapSpec('power(-2)', 1)) == -2
assert pc.end_signs(pc.MapSpec('[-x1^2]')) == (-1, -1)
r = pc.realizable_1d('+--+')
assert not r['realizable'] and r['witness'] is None
try:
    pc.group_lookup(0, 3)
except ValueError:
    pass
else:
    raise AssertionError('zero dimension accepted')
try:
    pc.end_signs(pc.MapSpec('[x1^2 - 25.5]'), window=5.0)
except pc.ComputationError as e:
    assert e.args[1] == 'not_proper'
else:
    raise AssertionError('non-proper map accepted')
");
}
