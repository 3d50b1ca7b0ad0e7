import collections as _collections

import numpy as _np

Stats = _collections.namedtuple("Stats", ["mean", "variance", "error_of_mean"])


def statistics(samples, axis=0):
    r"""
    Mean, sample variance and error of the mean of `samples` along `axis`.

    The error of the mean is the sample standard deviation divided by
    :math:`\sqrt{N}`. With a single sample the variance and the error are
    zero.

    Args:
        samples: Array-like of real samples.
        axis: Axis enumerating the samples.

    Returns:
        Stats: Named tuple `(mean, variance, error_of_mean)`.
    """
    samples = _np.asarray(samples, dtype=float)
    n = samples.shape[axis]
    mean = samples.mean(axis=axis)
    if n > 1:
        variance = samples.var(axis=axis, ddof=1)
    else:
        variance = _np.zeros_like(mean)
    return Stats(mean, variance, _np.sqrt(variance / n))


def stats_dict(stats):
    """Converts `Stats` into the `{"Mean", "Variance", "Sigma"}` mapping used
    in manifests."""
    return {
        "Mean": _np.asarray(stats.mean).tolist(),
        "Variance": _np.asarray(stats.variance).tolist(),
        "Sigma": _np.asarray(stats.error_of_mean).tolist(),
    }
