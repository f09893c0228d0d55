"""
StrideSense 合成语料模块
"""

from synthdata.generator import (
    SURFACES,
    DemographicsPlan,
    RpeTrajectory,
    band_log_energy,
    generate_corpus,
    generate_session,
    sessions_for,
)

__all__ = [
    "SURFACES",
    "DemographicsPlan",
    "RpeTrajectory",
    "band_log_energy",
    "generate_corpus",
    "generate_session",
    "sessions_for",
]
