import numpy as np
import pytest
from hypothesis import given, strategies as st

from npesim.errors import ValidationError
from npesim.mesh import BoundaryTrace, Grid
from npesim.profiles import canonical, eval_edge, eval_field, parse_profile, trace_from_profiles


def test_sum_of_terms(unit33):
    X, Y = unit33.XY
    f = eval_field("const:1+sine:0.5+linear:0,2,-1", unit33)
    assert np.allclose(f, 1 + 0.5 * np.sin(np.pi * X) * np.sin(np.pi * Y) + 2 * X - Y, atol=1e-15)


def test_negative_exponent_not_split():
    assert parse_profile("bump:1,0.5,0.5,1e+0") == (("bump", (1.0, 0.5, 0.5, 1.0)),)


def test_edges_match_field_restriction():
    g = Grid(17, 9, 2.0, 1.0)
    f = eval_field("linear:1,0.5,0.25+bump:1,0.3,0.2,0.4", g)
    for edge, ref in (("bottom", f[0]), ("top", f[-1]), ("left", f[:, 0]), ("right", f[:, -1])):
        assert np.allclose(eval_edge("linear:1,0.5,0.25+bump:1,0.3,0.2,0.4", g, edge), ref, atol=1e-15)


def test_sine_edge_vanishes_at_corners(unit33):
    tr = trace_from_profiles(unit33, {"bottom": "sine:2", "top": "sine2:1", "left": "const:0", "right": "const:0"})
    assert tr.bottom[16] == pytest.approx(2.0) and abs(tr.bottom[-1]) < 1e-15


def test_lift_term(unit33):
    tr = BoundaryTrace.constant(unit33, 0.7)
    assert np.allclose(eval_field("lift+const:0.3", unit33, lift_trace=tr), 1.0, atol=1e-15)
    with pytest.raises(ValidationError, match="boundary trace"):
        eval_field("lift", unit33)


@pytest.mark.parametrize("text, fragment", [
    ("", "empty"), ("wave:1", "unknown"), ("const:1,2", "argument"), ("const:abc", "non-numeric"),
    ("const:nan", "non-finite"), ("mode:1,1.5,1", "integers"), ("bump:1,0,0,0", "width"),
])
def test_rejects(text, fragment):
    with pytest.raises(ValidationError, match=fragment):
        parse_profile(text)


def test_field_only_terms_rejected_on_edges(unit33):
    with pytest.raises(ValidationError):
        eval_edge("mode:1,1,1", unit33, "bottom")


@given(st.lists(st.tuples(st.sampled_from(["const", "sine", "sine2"]), st.floats(-1e6, 1e6)), min_size=1, max_size=4))
def test_canonical_idempotent(terms):
    text = "+".join(f"{k}:{v!r}" for k, v in terms)
    assert canonical(canonical(text)) == canonical(text)
