import numpy as np
from hypothesis import strategies as st

from infocost import InformationStructure


def binary(*atoms):
    """Binary-state structure from ``(weight, first coordinate)`` pairs."""
    w = np.array([a[0] for a in atoms], dtype=float)
    p = np.array([[a[1], 1 - a[1]] for a in atoms], dtype=float)
    return InformationStructure(w, p)


def entropy(p):
    """Shannon entropy in nats, written out with an explicit loop."""
    total = 0.0
    for x in np.ravel(p):
        if x > 0:
            total -= x * np.log(x)
    return total


@st.composite
def structures(draw, n_states=None, max_atoms=6, interior=False):
    """Random structures built from Dirichlet draws seeded by hypothesis."""
    k = draw(st.integers(2, 3)) if n_states is None else n_states
    n = draw(st.integers(1, max_atoms))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    post = rng.dirichlet(np.ones(k), size=n)
    if interior:
        post = 0.02 + 0.96 * post
        post /= post.sum(axis=1, keepdims=True)
    return InformationStructure(rng.dirichlet(np.ones(n)), post)


def random_tree(rng, n_states=2, depth=2, max_children=3):
    """Random signal tree whose layers often repeat beliefs.

    Some nodes get uninformative signals and siblings may share a likelihood
    template, so distinct histories regularly land on the same belief.
    """
    from infocost import SignalTree

    prior = rng.dirichlet(np.ones(n_states))
    layers = []
    nodes = 1
    for d in range(depth):
        template = rng.dirichlet(np.ones(max_children), size=n_states).T
        mats = []
        for _ in range(nodes):
            u = rng.random()
            if u < 0.3:
                c = int(rng.integers(1, max_children + 1))
                L = np.repeat(rng.dirichlet(np.ones(c))[:, None], n_states, axis=1)
            elif u < 0.6:
                L = template
            else:
                L = rng.dirichlet(np.ones(int(rng.integers(2, max_children + 1))), size=n_states).T
            mats.append(L)
        layers.append(("acquire", mats))
        nodes = sum(L.shape[0] for L in mats)
        if d < depth - 1:
            if rng.random() < 0.4:
                D = np.eye(nodes)
            else:
                m = int(rng.integers(1, nodes + 1))
                D = rng.dirichlet(np.full(m, 0.5), size=nodes)
            layers.append(("dispose", D))
            nodes = D.shape[1]
    return SignalTree(prior, layers)
