"""
ANASTAARS Plotting Module
Median trajectory charts rendered to standalone SVG
"""

import logging
from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

logger = logging.getLogger(__name__)

SVG_SALT = 'anastaars'


def series_gid(name: str) -> str:
    """SVG group id carried by each optimizer's line"""
    return f"series-{name}"


def emit_plot(table: pd.DataFrame, path: Union[str, Path], ratio: bool = False, title: str = '') -> Path:
    """Write a median-trajectory line chart, one line per optimizer.

    Series whose values are all missing are dropped; if nothing remains a
    ValueError is raised and no file is written. Output is byte-stable for
    identical input.
    """
    column = 'ratio_median' if ratio else 'median'
    path = Path(path)
    if table.empty or column not in table:
        raise ValueError(f"Median table has no '{column}' data to plot")

    series = [(name, group) for name, group in table.groupby('optimizer', sort=True)
              if group[column].notna().any()]
    if not series:
        raise ValueError(f"Every series in the median table is empty for '{column}'")

    with plt.rc_context({'svg.hashsalt': SVG_SALT, 'svg.fonttype': 'none'}):
        fig, ax = plt.subplots(figsize=(8, 5))
        for name, group in series:
            group = group.dropna(subset=[column])
            ax.plot(group['shots'], group[column], drawstyle='steps-post',
                    linewidth=2, label=name, gid=series_gid(name))
            if not ratio:
                ax.fill_between(group['shots'], group['q25'], group['q75'], step='post', alpha=0.2)
        ax.set_xlabel('Cumulative shots')
        ax.set_ylabel('Approximation ratio (median)' if ratio else 'Best true objective so far (median)')
        if title:
            ax.set_title(title)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format='svg', metadata={'Date': None})
        plt.close(fig)

    logger.info(f"Plot written to {path}")
    return path
