"""Published test-phase metrics for two SAM systems, used as composition fixtures.

Each cell is (R², RMSE nm, MAPE %, PT s) per (set, method). The sector test
sets held 1,000 rows and the whole-interval set 5,000 rows.
"""
from samez.evaluation import MetricsRow, build_report

N_TEST = {"s0": 1000, "s1": 1000, "s2": 1000, "s3": 1000, "s4": 1000, "whole": 5000}

SAM1 = {
    "s0": {"PR": (0.9996, 0.0646, 0.92, 0.5070), "ANN": (0.9979, 0.1578, 2.23, 0.2465),
           "RFR": (0.9949, 0.2278, 3.32, 0.0255)},
    "s1": {"PR": (0.9939, 0.2369, 0.82, 1.8970), "ANN": (0.9940, 0.2288, 1.21, 0.1926),
           "RFR": (0.9919, 0.2740, 0.98, 0.0247)},
    "s2": {"PR": (0.9881, 0.6578, 1.62, 1.9120), "ANN": (0.9944, 0.4398, 1.24, 0.2661),
           "RFR": (0.9927, 0.5333, 1.25, 0.0251)},
    "s3": {"PR": (0.9873, 1.4296, 2.93, 1.9360), "ANN": (0.9980, 0.5523, 0.09, 0.1812),
           "RFR": (0.9947, 0.9022, 1.44, 0.0256)},
    "s4": {"PR": (0.9942, 1.0533, 2.41, 1.3440), "ANN": (0.9976, 0.6713, 1.50, 0.1771),
           "RFR": (0.9976, 0.6779, 0.96, 0.0255)},
    "whole": {"PR": (0.9764, 2.0538, 8.04, 8.6560), "ANN": (0.9914, 1.2869, 7.27, 0.2763),
              "RFR": (0.9389, 3.4020, 4.39, 0.0778)},
}

SAM2 = {
    "s0": {"PR": (0.9766, 3.1722, 14.51, 0.5170), "ANN": (0.9800, 3.1006, 14.21, 0.1328),
           "RFR": (0.9809, 2.9824, 6.08, 0.0267)},
    "s1": {"PR": (0.9583, 2.2741, 1.57, 2.9570), "ANN": (0.9823, 1.5595, 0.98, 0.1836),
           "RFR": (0.9675, 1.9888, 0.99, 0.0266)},
    "s2": {"PR": (0.9989, 0.2432, 0.17, 0.7480), "ANN": (0.9778, 1.1425, 0.37, 0.2586),
           "RFR": (0.9788, 1.1029, 0.30, 0.0262)},
    "s3": {"PR": (0.9999, 0.0358, 0.04, 0.5590), "ANN": (0.9988, 0.2695, 0.29, 0.1843),
           "RFR": (0.9995, 0.1655, 0.15, 0.0260)},
    "s4": {"PR": (0.9999, 0.0418, 0.04, 0.7450), "ANN": (0.9991, 0.2251, 0.23, 0.1954),
           "RFR": (0.9997, 0.1401, 0.13, 0.0255)},
    "whole": {"PR": (0.9849, 2.8116, 4.63, 12.9340), "ANN": (0.9836, 3.001, 5.78, 0.2693),
              "RFR": (0.9993, 0.2078, 0.21, 0.1027)},
}


def report(table, sam_id):
    rows = [MetricsRow.from_pt(sam_id, key, method, *cell, N_TEST[key])
            for key, cells in table.items() for method, cell in cells.items()]
    return build_report(rows)
