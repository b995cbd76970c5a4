from .ip import (
    EstimatorConfig,
    IpExperimentError,
    IpRow,
    IpTrace,
    NetSpec,
    late_mean,
    run_ip_experiment,
)
from .output import read_csv, read_manifest, write_csv, write_manifest
from .toy import (
    ConvergenceStudy,
    ToyRecord,
    ToySpec,
    compare_estimators,
    run_toy_convergence,
    toy_rows,
)
