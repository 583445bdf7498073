"""Figure rendering for portraits and orbits.

Figures are written straight to files (Agg backend); the CLI calls these
next to its CSV/JSON output when asked for plots.
"""

import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

TWO_PI = 2.0 * math.pi


def save_portrait(phi, theta, path, title=None, dpi=150):
    """Phase portrait: boundary angle (mod 2pi) against p = sin(theta).

    phi/theta are (steps+1, n_orbits) arrays from a batch iteration.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot(phi % TWO_PI, np.sin(theta), ",", color="black", markersize=0.2,
            rasterized=True)
    ax.set_xlim(0.0, TWO_PI)
    ax.set_ylim(-1.0, 1.0)
    ax.set_xlabel(r"$\varphi$")
    ax.set_ylabel(r"$p=\sin\theta$")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)


def save_curve_with_orbit(curve, points, path, title=None, dpi=150):
    """The table boundary with a closed polygonal trajectory drawn inside."""
    grid = np.linspace(0.0, TWO_PI, 720)
    boundary = curve.position(grid)
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.plot(boundary[:, 0], boundary[:, 1], color="black", lw=1.2)
    if points is not None and len(points):
        closed = np.vstack([points, points[:1]])
        ax.plot(closed[:, 0], closed[:, 1], color="tab:red", lw=1.0, marker="o",
                markersize=3)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
