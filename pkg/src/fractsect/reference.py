"""Sector index metadata and a reference long-scale spectrum summary.

The summary rows are used only to check the arithmetic that links the
columns (width and asymmetry from the three alphas); the price data behind
them is not shipped.
"""

from __future__ import annotations

from dataclasses import dataclass

from .series import SectorMeta

SECTORS = (
    SectorMeta("AU", "Auto", 15),
    SectorMeta("BM", "Basic Materials", 189),
    SectorMeta("BX", "Bankex", 10),
    SectorMeta("CD", "Consumer Durables", 12),
    SectorMeta("CDGS", "Consumer Discretionary Goods & Services", 297),
    SectorMeta("CG", "Capital Goods", 25),
    SectorMeta("CPSE", "CPSE", 52),
    SectorMeta("EG", "Energy", 27),
    SectorMeta("FMCG", "Fast Moving Consumer Goods", 81),
    SectorMeta("FN", "Financials", 139),
    SectorMeta("HC", "Healthcare", 96),
    SectorMeta("ID", "Industrials", 203),
    SectorMeta("II", "India Infrastructure", 30),
    SectorMeta("IT", "Information Technology", 62),
    SectorMeta("MT", "Metal", 10),
    SectorMeta("ONG", "Oil & Gas", 10),
    SectorMeta("PSU", "PSU", 56),
    SectorMeta("PWR", "Power", 11),
    SectorMeta("RE", "Realty", 10),
    SectorMeta("TC", "Telecom", 17),
    SectorMeta("Teck", "Teck", 28),
    SectorMeta("UT", "Utilities", 24),
)

_BY_SYMBOL = {m.symbol.lower(): m for m in SECTORS}


def sector_meta(label: str) -> SectorMeta | None:
    return _BY_SYMBOL.get(label.lower())


@dataclass(frozen=True)
class SummaryRow:
    sector: str
    delta_alpha: float
    alpha_max: float
    alpha_0: float
    alpha_min: float
    h2: float
    dh: float
    b: float


# sector, delta_alpha, alpha_max, alpha_0, alpha_min, H2, dH, B
SUMMARY = tuple(SummaryRow(*r) for r in (
    ("AU", 1.71, 1.92, 0.99, 0.21, 0.72, 1.38, -0.09),
    ("BM", 0.64, 0.69, 0.40, 0.05, 0.33, 0.46, 0.09),
    ("BX", 1.07, 1.54, 0.97, 0.47, 0.86, 0.75, -0.08),
    ("CD", 1.21, 1.37, 0.59, 0.16, 0.47, 0.93, -0.29),
    ("CDGS", 0.46, 0.83, 0.73, 0.37, 0.66, 0.30, 0.57),
    ("CG", 1.55, 1.51, 0.75, -0.04, 0.50, 1.15, -0.02),
    ("CPSE", 1.40, 1.61, 0.92, 0.21, 0.71, 1.09, 0.02),
    ("EG", 0.58, 1.07, 0.82, 0.49, 0.82, 0.35, 0.13),
    ("FMCG", 1.27, 1.49, 0.85, 0.22, 0.67, 0.98, 0.00),
    ("FN", 0.71, 0.86, 0.54, 0.15, 0.44, 0.55, 0.11),
    ("HC", 0.85, 1.16, 0.83, 0.31, 0.75, 0.55, 0.23),
    ("ID", 0.71, 1.01, 0.51, 0.30, 0.47, 0.48, -0.42),
    ("II", 0.87, 1.33, 1.00, 0.46, 0.87, 0.65, 0.26),
    ("IT", 0.40, 0.76, 0.67, 0.36, 0.62, 0.26, 0.51),
    ("MT", 0.89, 0.59, 0.32, -0.29, 0.18, 0.65, 0.37),
    ("ONG", 1.04, 1.23, 0.52, 0.19, 0.45, 0.68, -0.36),
    ("PSU", 1.65, 1.60, 0.71, -0.04, 0.47, 1.25, -0.08),
    ("PWR", 1.01, 1.43, 0.87, 0.42, 0.80, 0.70, -0.11),
    ("RE", 0.41, 0.86, 0.71, 0.45, 0.84, 0.22, 0.23),
    ("TC", 1.51, 1.75, 0.84, 0.23, 0.67, 1.12, -0.19),
    ("Teck", 0.82, 1.20, 1.01, 0.38, 0.84, 0.63, 0.54),
    ("UT", 0.66, 1.20, 1.03, 0.54, 0.91, 0.44, 0.50),
))

# RE's printed B disagrees with its own alphas at two-decimal precision
INCONSISTENT = frozenset({"RE"})
