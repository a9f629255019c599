"""Critical-value table for the Nemenyi post-hoc test.

``Q[alpha][k - 2]`` is the alpha-level critical value for comparing k
treatments: the (1 - alpha) quantile of the studentized range
distribution at infinite degrees of freedom, divided by sqrt(2).

Values were computed with ``scipy.stats.studentized_range.ppf(1 - alpha,
k, inf) / sqrt(2)`` and frozen here; the k <= 10 entries agree with the
published tables commonly used alongside critical difference diagrams
(e.g. 1.960, 2.343, 2.569, ... for alpha = 0.05).
"""

K_MIN = 2
K_MAX = 100

_Q_05 = (
    1.959964, 2.343701, 2.569032, 2.727774, 2.849705, 2.948320, 3.030878,
    3.101730, 3.163684, 3.218654, 3.268004, 3.312739, 3.353618, 3.391230,
    3.426041, 3.458425, 3.488685, 3.517073, 3.543799, 3.569040, 3.592946,
    3.615646, 3.637252, 3.657861, 3.677556, 3.696413, 3.714498, 3.731869,
    3.748578, 3.764672, 3.780193, 3.795179, 3.809664, 3.823680, 3.837254,
    3.850413, 3.863181, 3.875579, 3.887627, 3.899344, 3.910747, 3.921852,
    3.932673, 3.943224, 3.953518, 3.963566, 3.973379, 3.982969, 3.992343,
    4.001512, 4.010485, 4.019268, 4.027869, 4.036297, 4.044556, 4.052654,
    4.060597, 4.068390, 4.076038, 4.083547, 4.090921, 4.098166, 4.105284,
    4.112281, 4.119161, 4.125927, 4.132582, 4.139131, 4.145576, 4.151921,
    4.158168, 4.164320, 4.170381, 4.176352, 4.182236, 4.188036, 4.193754,
    4.199392, 4.204953, 4.210437, 4.215848, 4.221187, 4.226456, 4.231656,
    4.236790, 4.241859, 4.246865, 4.251809, 4.256692, 4.261516, 4.266283,
    4.270993, 4.275648, 4.280249, 4.284798, 4.289295, 4.293742, 4.298139,
    4.302488,
)

_Q_10 = (
    1.644854, 2.052293, 2.291341, 2.459516, 2.588521, 2.692732, 2.779884,
    2.854606, 2.919889, 2.977768, 3.029694, 3.076733, 3.119693, 3.159199,
    3.195743, 3.229723, 3.261461, 3.291224, 3.319233, 3.345676, 3.370712,
    3.394477, 3.417089, 3.438651, 3.459253, 3.478971, 3.497878, 3.516033,
    3.533492, 3.550305, 3.566516, 3.582165, 3.597288, 3.611917, 3.626084,
    3.639814, 3.653134, 3.666066, 3.678631, 3.690848, 3.702736, 3.714312,
    3.725590, 3.736584, 3.747310, 3.757778, 3.768000, 3.777987, 3.787750,
    3.797297, 3.806638, 3.815781, 3.824735, 3.833505, 3.842101, 3.850527,
    3.858790, 3.866897, 3.874853, 3.882663, 3.890333, 3.897866, 3.905268,
    3.912543, 3.919696, 3.926729, 3.933647, 3.940453, 3.947151, 3.953745,
    3.960236, 3.966628, 3.972925, 3.979128, 3.985240, 3.991265, 3.997204,
    4.003059, 4.008833, 4.014528, 4.020146, 4.025690, 4.031160, 4.036558,
    4.041888, 4.047149, 4.052345, 4.057475, 4.062543, 4.067549, 4.072496,
    4.077383, 4.082213, 4.086987, 4.091705, 4.096371, 4.100983, 4.105545,
    4.110056,
)

Q = {0.05: _Q_05, 0.10: _Q_10}
