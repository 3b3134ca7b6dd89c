"""Report figures: small matplotlib renderings written next to the JSON/CSV."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)


def line_figure(path, title: str, xlabel: str, ylabel: str, series,
                hlines=(), logy: bool = False) -> str:
    """series: (label, xs, ys) or (label, xs, ys, yerr); hlines: (label, y)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    for s in series:
        label, xs, ys = s[0], s[1], s[2]
        yerr = s[3] if len(s) > 3 else None
        if yerr is not None:
            ax.errorbar(xs, ys, yerr=yerr, marker="o", capsize=3, label=label)
        else:
            ax.plot(xs, ys, marker="o", label=label)
    for label, y in hlines:
        ax.axhline(y, linestyle="--", linewidth=1.0, color="0.4", label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return str(path)


def bar_figure(path, title: str, categories, groups, ylabel: str) -> str:
    """Grouped bars; groups: list of (label, values) aligned with categories."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    m = len(groups)
    width = 0.8 / max(m, 1)
    for g, (label, values) in enumerate(groups):
        xs = [i + (g - (m - 1) / 2) * width for i in range(len(categories))]
        ax.bar(xs, values, width=width, label=label)
    ax.set_xticks(range(len(categories)))
    ax.set_xticklabels([str(c) for c in categories], rotation=20, fontsize=8)
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return str(path)


def render(path, spec: dict) -> str:
    """Dispatch a figure spec dict ({"kind": "line"|"bar", ...}) to a renderer."""
    kind = spec.get("kind")
    if kind == "line":
        return line_figure(
            path,
            spec["title"],
            spec["xlabel"],
            spec["ylabel"],
            spec["series"],
            hlines=spec.get("hlines", ()),
            logy=spec.get("logy", False),
        )
    if kind == "bar":
        return bar_figure(
            path, spec["title"], spec["categories"], spec["groups"], spec["ylabel"]
        )
    raise ValueError(f"unknown figure kind: {kind!r}")
