import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field


class FermatSettings(BaseModel):
    """Environment-driven tuning of the oracle and of logging."""

    model_config = ConfigDict(frozen=True)

    scan_points: int = Field(default=20000, ge=12)
    max_iters: int = Field(default=500, gt=0)
    step_init: float = Field(default=0.5, gt=0)
    tol_grad: float = Field(default=1e-10, gt=0, le=1e-9)
    vertex_snap: float = Field(default=1e-6, gt=0)
    log_level: str = "WARNING"
    log_file: Optional[str] = None
    report_dir: str = os.path.join("data", "reports")

    def oracle_options(self):
        # imported here so the config module stays importable on its own
        from oracle import OracleOptions

        return OracleOptions(
            scan_points=self.scan_points,
            max_iters=self.max_iters,
            step_init=self.step_init,
            tol_grad=self.tol_grad,
            vertex_snap=self.vertex_snap,
        )


_ENV_FIELDS = {
    "FERMAT_SCAN_POINTS": "scan_points",
    "FERMAT_MAX_ITERS": "max_iters",
    "FERMAT_STEP_INIT": "step_init",
    "FERMAT_TOL_GRAD": "tol_grad",
    "FERMAT_VERTEX_SNAP": "vertex_snap",
    "FERMAT_LOG_LEVEL": "log_level",
    "FERMAT_LOG_FILE": "log_file",
    "FERMAT_REPORT_DIR": "report_dir",
}


def load_config(env_file: Optional[str] = None) -> FermatSettings:
    """Load environment variables from .env file"""
    load_dotenv(env_file)

    values = {}
    for env_name, field_name in _ENV_FIELDS.items():
        raw = os.environ.get(env_name)
        # Empty strings count as unset
        if raw is not None and raw.strip():
            values[field_name] = raw.strip()

    return FermatSettings(**values)
