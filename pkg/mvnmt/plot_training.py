import logging
from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pylab as plt
import pandas as pd


def plot_training_curve(
    curve: pd.DataFrame, output_file: Union[str, Path], title: Optional[str] = None
) -> Path:
    """
    Plots training and validation cost against the iteration.

    :param curve: table with columns iteration, train_loss and val_loss
    :param output_file: location of the png file
    :param title: figure title
    :return: location of the written figure
    """
    output_file = Path(output_file)
    fig, ax = plt.subplots(figsize=(8, 5))
    ax.plot(
        curve["iteration"], curve["train_loss"], label="training cost", color="tab:blue"
    )
    ax.plot(
        curve["iteration"], curve["val_loss"], label="validation cost", color="tab:orange"
    )
    if len(curve):
        best = curve["val_loss"].idxmin()
        ax.axvline(curve["iteration"][best], color="grey", linestyle="--", linewidth=0.8)
    ax.set_xlabel("iteration")
    ax.set_ylabel("cost")
    ax.grid(True, alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.savefig(output_file, bbox_inches="tight")
    plt.close(fig)
    logging.info("Wrote training curve figure to %s", output_file)
    return output_file
