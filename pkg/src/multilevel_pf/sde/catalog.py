"""Builtin model catalog."""

BUILTIN_MODEL_PATHS: dict[str, str] = {
    "OU": "multilevel_pf.sde.ou.OrnsteinUhlenbeck",
    "GBM": "multilevel_pf.sde.gbm.GeometricBrownianMotion",
    "LANGEVIN": "multilevel_pf.sde.langevin.StudentTLangevin",
    "NLM": "multilevel_pf.sde.nlm.NonLinearDiffusion",
}
