import pandas as pd

from shared.schemas import RunLog

CSV_COLUMNS = [
    "n",
    "t_n",
    "lambda_n",
    "gamma_inf",
    "gamma_2",
    "eta_inf",
    "eta_2",
    "beta_inf",
    "beta_2",
    "eta_tilde_inf",
    "estimator_space",
    "E_coarsen",
    "E_time",
    "E_space",
    "err_linf_l2",
    "err_l2_l2",
    "iei",
    "dofs",
    "rejected_steps",
    "wall_time",
]


def runlog_frame(log: RunLog) -> pd.DataFrame:
    """One row per accepted step in the fixed CSV column order"""
    rows = [record.model_dump() for record in log.records]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def time_steps(log: RunLog) -> pd.Series:
    return pd.Series([record.lambda_n for record in log.records], name="lambda_n")
