"""Shared test utilities: finite-difference gradients and tiny fixtures."""

import numpy as np

from evonet.nn.network import loss_only


def finite_difference_grads(net, x, y, h=1e-6):
    """Central-difference gradient of the training loss for every parameter
    array, reusing the dropout masks cached by the last analytic pass."""
    out = []
    for p in net.parameter_arrays():
        fd = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            lp = loss_only(net, x, y)
            p[idx] = orig - h
            lm = loss_only(net, x, y)
            p[idx] = orig
            fd[idx] = (lp - lm) / (2.0 * h)
        out.append(fd)
    return out


def relative_error(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    return np.linalg.norm(a - b) / max(na, nb, 1e-10)


def one_hot_rows(labels, num_classes):
    out = np.zeros((len(labels), num_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out
