"""Bundled example datasets.

Both files are synthetic: they are generated (see scripts/ in the source
tree) to reproduce the headline numbers of the two case studies they
stand in for, since the original per-subject data are not redistributed
here.  Column contracts match the CSV readers in meta and glm.
"""

from importlib import resources

from .glm import GlmDataset, read_glm_csv
from .meta import MetaDataset, read_meta_csv

__all__ = [
    "coinflip_meta_path",
    "neonatal_births_path",
    "load_coinflip_meta",
    "load_neonatal_births",
]


def _path(name: str) -> str:
    return str(resources.files("bff").joinpath("data", name))


def coinflip_meta_path() -> str:
    """CSV of 48 per-flipper same-side proportions with standard errors."""
    return _path("coinflip_meta.csv")


def neonatal_births_path() -> str:
    """CSV of births: 0/1 death outcome plus 14 exposure covariates."""
    return _path("neonatal_births.csv")


def load_coinflip_meta() -> MetaDataset:
    return read_meta_csv(coinflip_meta_path())


def load_neonatal_births() -> GlmDataset:
    return read_glm_csv(neonatal_births_path())
