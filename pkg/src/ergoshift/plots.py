"""Static SVG figures for sweep and oscillation tables."""

from __future__ import annotations


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "ergoshift"
    return plt


def _save(fig, plt, path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def sweep_plot(rows, path) -> None:
    """Sup-error against discount rate on log-log axes."""
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    eps = [r["epsilon"] for r in rows]
    err = [max(r["sup_error"], 1e-300) for r in rows]
    ax.loglog(eps, err, "o-")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("sampled sup error")
    ax.invert_xaxis()
    _save(fig, plt, path)


def oscillation_plot(rows, path) -> None:
    """Discounted values per block index next to their targets."""
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ps = [r["p"] for r in rows]
    ax.plot(ps, [r["U_value"] for r in rows], "o", label="U_eps_p(omega)")
    ax.plot(ps, [r["target"] for r in rows], "x", label="u0(omega) - mu_[p](u0)")
    ax.set_xticks(ps)
    ax.set_xlabel("p")
    ax.legend()
    _save(fig, plt, path)
