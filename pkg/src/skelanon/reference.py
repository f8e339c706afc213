"""Reference results from full-scale runs on NTU60 / ETRI-activity3D.

These numbers come from GPU-scale training with the full Shift-GCN / MS-G3D /
2s-AGCN backbones on the licensed datasets.  They are documentation targets
for anyone reproducing at full scale and inputs to the selection-metric
arithmetic; desk-scale synthetic runs are not expected to match them.
"""

# Raw-data privacy leakage, re-identification on NTU60 (top-1/top-5 mean, std).
IDENTITY_LEAKAGE = {
    "shift_gcn": {"top1": 0.7962, "top1_std": 0.0070, "top5": 0.9681, "top5_std": 0.0009},
    "ms_g3d": {"top1": 0.8223, "top1_std": 0.0087, "top5": 0.9751, "top5_std": 0.0007},
    "2s_agcn": {"top1": 0.7689, "top1_std": 0.0183, "top5": 0.9656, "top5_std": 0.0032},
}

# Raw-data gender leakage on ETRI-activity3D (accuracy mean, std).
GENDER_LEAKAGE = {
    "shift_gcn": {"acc": 0.8599, "std": 0.0040},
    "ms_g3d": {"acc": 0.8790, "std": 0.0017},
    "2s_agcn": {"acc": 0.8643, "std": 0.0047},
}

# Identity-anonymization trade-off grid on NTU60 with the Shift-GCN backbone,
# learning rate 0.01: (variant, alpha, beta, action_acc, privacy_acc, rmse).
IDENTITY_TRADEOFF_GRID = [
    ("residual_mlp", 1.0, 5.0, 0.9191, 0.08303, 0.00980),
    ("residual_mlp", 1.0, 10.0, 0.9175, 0.04202, 0.00860),
    ("residual_mlp", 1.0, 15.0, 0.9351, 0.17070, 0.00380),
    ("residual_mlp", 1.0, 20.0, 0.9235, 0.12010, 0.00550),
    ("residual_mlp", 2.0, 5.0, 0.8909, 0.13190, 0.02431),
    ("residual_mlp", 2.0, 10.0, 0.8838, 0.09381, 0.01822),
    ("residual_mlp", 2.0, 15.0, 0.9113, 0.14690, 0.01008),
    ("residual_mlp", 2.0, 20.0, 0.8728, 0.07691, 0.01020),
    ("residual_mlp", 3.0, 5.0, 0.8731, 0.08266, 0.02557),
    ("residual_mlp", 3.0, 10.0, 0.8814, 0.07500, 0.01340),
    ("residual_mlp", 3.0, 15.0, 0.8891, 0.09286, 0.01649),
    ("residual_mlp", 3.0, 20.0, 0.8595, 0.10550, 0.01410),
    ("unet", 0.3, 0.5, 0.9188, 0.08657, 0.02463),
    ("unet", 0.3, 1.0, 0.9206, 0.07622, 0.01945),
    ("unet", 0.3, 1.5, 0.9209, 0.07891, 0.01513),
    ("unet", 0.3, 2.0, 0.9145, 0.05701, 0.01655),
    ("unet", 0.5, 0.5, 0.9060, 0.08045, 0.02959),
    ("unet", 0.5, 1.0, 0.9074, 0.06956, 0.06496),
    ("unet", 0.5, 1.5, 0.9099, 0.07791, 0.02055),
    ("unet", 0.5, 2.0, 0.9071, 0.05509, 0.01750),
    ("unet", 0.7, 0.5, 0.8945, 0.06597, 0.12950),
    ("unet", 0.7, 1.0, 0.9022, 0.05277, 0.07635),
    ("unet", 0.7, 1.5, 0.8988, 0.08494, 0.02410),
    ("unet", 0.7, 2.0, 0.9006, 0.04352, 0.02232),
]

# Representative identity-anonymization results per backbone
# (backbone, variant, alpha, beta, lr, privacy_acc, action_acc, rmse).
IDENTITY_REPRESENTATIVE = [
    ("shift_gcn", "residual_mlp", 1.0, 10.0, 0.0100, 0.04202, 0.9175, 0.00860),
    ("shift_gcn", "unet", 0.3, 2.0, 0.0100, 0.05701, 0.9145, 0.01655),
    ("ms_g3d", "residual_mlp", 1.0, 10.0, 0.0005, 0.07770, 0.9215, 0.01092),
    ("ms_g3d", "unet", 0.3, 2.0, 0.0005, 0.10110, 0.9243, 0.01115),
    ("2s_agcn", "residual_mlp", 1.0, 10.0, 0.0050, 0.05889, 0.8994, 0.01446),
    ("2s_agcn", "unet", 0.3, 2.0, 0.0050, 0.03514, 0.8908, 0.07536),
]

# Reconstruction-error sweep (alpha fixed at 1, residual anonymizer, NTU60):
# beta -> (rmse, action_acc, action_std, privacy_acc, privacy_std).
RECONSTRUCTION_SWEEP = {
    5.0: (0.012920, 0.9144, 0.002025, 0.08016, 0.016120),
    10.0: (0.008804, 0.9138, 0.005149, 0.03964, 0.006796),
    25.0: (0.004570, 0.9210, 0.004780, 0.08288, 0.030340),
    50.0: (0.002268, 0.9327, 0.002413, 0.12080, 0.038370),
    75.0: (0.001636, 0.9385, 0.002549, 0.15790, 0.044330),
}
