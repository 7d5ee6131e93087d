"""From soft word assignments to final segments, and the alpha sweep."""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from spsg import solver as _solver


@dataclass(frozen=True)
class Assignment:
    word_of: np.ndarray
    selected_words: tuple

    @property
    def K(self):
        return len(self.selected_words)

    @property
    def used_words(self):
        return tuple(int(w) for w in np.unique(self.word_of))


def assign(U, selected=None):
    """Assign each superpixel to its strongest selected word.

    Only rows in ``selected`` (default: rows above the solver's selection
    threshold) compete; ties go to the lower row index.
    """
    U = np.asarray(U, dtype=np.float64)
    rows = _solver.selected_rows(U) if selected is None else np.asarray(selected, dtype=np.int64)
    assert rows.size > 0, "no selected rows"
    rows = np.sort(rows)
    word_of = rows[np.argmax(U[rows], axis=0)]
    return Assignment(word_of, tuple(int(r) for r in rows))


def merge_components(graph, word_of):
    """Component id per superpixel over edges joining same-word neighbors."""
    word_of = np.asarray(word_of)
    same = word_of[graph.i] == word_of[graph.j]
    i, j = graph.i[same], graph.j[same]
    adj = sp.csr_matrix((np.ones(i.size), (i, j)), shape=(graph.n, graph.n))
    _, comp = connected_components(adj, directed=False)
    return comp


def merge(spmap, graph, assignment):
    """Pixel label map of merged segments with dense ids."""
    comp = merge_components(graph, assignment.word_of)
    return comp[spmap.labels]


@dataclass
class SegmentationEntry:
    alpha: float
    labels: np.ndarray
    K: int
    segments: int
    objective: float
    converged: bool
    iterations: int = 0
    trace: list = None


@dataclass
class SegmentationFamily:
    lambda_max: float
    entries: list = field(default_factory=list)

    @property
    def alphas(self):
        return [e.alpha for e in self.entries]


def _worker_count():
    try:
        return max(1, int(os.environ.get("SPSG_THREADS", "1")))
    except ValueError:
        return 1


def sweep(instance, spmap, graph, alpha_grid, params=None, lam_max=None,
          warm_start=True, trace=False, workers=None):
    """Solve, assign and merge once per alpha (ascending).

    ``lam_max`` is computed once when not given. With ``warm_start`` each
    solve starts from the previous alpha's final state and runs in order;
    otherwise the solves are independent and may run on ``workers`` threads
    (default ``SPSG_THREADS``).
    """
    params = params or _solver.SolverParams()
    alphas = sorted(float(a) for a in alpha_grid)
    if not alphas:
        raise ValueError("alpha grid must not be empty")
    if lam_max is None:
        lam_max = _solver.lambda_max(instance, params)
    kkt = _solver.build_solver_kkt(instance, params)

    def run(alpha, state):
        sol = _solver.solve(instance.with_lambda(alpha * lam_max), params, state=state,
                            kkt=kkt, trace=trace)
        a = assign(sol.U)
        labels = merge(spmap, graph, a)
        entry = SegmentationEntry(alpha, labels, a.K, int(labels.max()) + 1, sol.objective,
                                  sol.converged, sol.iterations, sol.trace)
        return entry, sol.state

    family = SegmentationFamily(float(lam_max))
    if warm_start:
        state = None
        for alpha in alphas:
            entry, state = run(alpha, state)
            family.entries.append(entry)
    else:
        workers = workers or _worker_count()
        with ThreadPoolExecutor(max_workers=workers) as pool:
            family.entries = [e for e, _ in pool.map(lambda a: run(a, None), alphas)]
    return family
