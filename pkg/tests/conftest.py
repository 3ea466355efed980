import warnings

import pytest
from hypothesis import settings

from qdesign.gadgets import GenericityWarning, build_absorber, canonical_parameters
from qdesign.pipeline import _to_V, find_xstar
from qdesign.template import TemplateParams, sample_template

settings.register_profile("qdesign", deadline=None)
settings.load_profile("qdesign")

P0 = dict(q=2, n=4, s=2, r=1, ell=2, m=2)


def planted_state(seed=0):
    """P0 template with the in-flip of the canonical absorber planted in color 0.

    Returns (state, x*, absorber, root in V).
    """
    st = sample_template(TemplateParams(**P0, z=1, tau=1, seed=seed))
    X = find_xstar(st, 1)
    t = st.tower
    K = t.K
    wp, w = canonical_parameters(t, 1, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GenericityWarning)
        a = build_absorber(t, st.N, X, wp, w)
    for x in a.xs:
        st.plant(0, [K.add(p, K.mul(x[0][0], w[0])) for p in wp])
    return st, X, a, _to_V(st, 0, a.root)


@pytest.fixture
def planted():
    return planted_state()
