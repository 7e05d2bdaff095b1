"""Static SVG renderings of the confusion matrix and ROC curves.

Both functions take the rows of the CSV files written by ``eval`` so a plot
can be regenerated from the CSVs alone.
"""

from __future__ import annotations

from collections import defaultdict
from xml.sax.saxutils import escape

_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def confusion_svg(rows: list[dict], cell=40, margin=70) -> str:
    """Heat-map from confusion CSV rows (``true_label`` plus one column per predicted label)."""
    labels = [r["true_label"] for r in rows]
    counts = [[int(r[c]) for c in labels] for r in rows]
    n = len(labels)
    peak = max((v for row in counts for v in row), default=0) or 1
    size = margin + n * cell + 10
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" font-family="sans-serif" font-size="11">']
    out.append(f'<text x="{margin + n * cell / 2}" y="14" text-anchor="middle">predicted</text>')
    out.append(f'<text x="12" y="{margin + n * cell / 2}" text-anchor="middle" transform="rotate(-90 12 {margin + n * cell / 2})">true</text>')
    for j, lab in enumerate(labels):
        out.append(f'<text x="{margin + j * cell + cell / 2}" y="{margin - 8}" text-anchor="middle">{escape(lab)}</text>')
        out.append(f'<text x="{margin - 8}" y="{margin + j * cell + cell / 2 + 4}" text-anchor="end">{escape(lab)}</text>')
    for i in range(n):
        for j in range(n):
            shade = int(255 - 200 * counts[i][j] / peak)
            x, y = margin + j * cell, margin + i * cell
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({shade},{shade},255)" stroke="#fff"/>')
            out.append(f'<text x="{x + cell / 2}" y="{y + cell / 2 + 4}" text-anchor="middle">{counts[i][j]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def roc_svg(rows: list[dict], size=320, margin=40) -> str:
    """ROC polylines from ROC CSV rows (``class``, ``fpr``, ``tpr``)."""
    curves = defaultdict(list)
    for r in rows:
        curves[r["class"]].append((float(r["fpr"]), float(r["tpr"])))
    plot = size - 2 * margin

    def pt(fx, ty):
        return f"{margin + fx * plot:.2f},{margin + (1 - ty) * plot:.2f}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" font-family="sans-serif" font-size="11">',
           f'<rect x="{margin}" y="{margin}" width="{plot}" height="{plot}" fill="none" stroke="#000"/>',
           f'<polyline points="{pt(0, 0)} {pt(1, 1)}" fill="none" stroke="#aaa" stroke-dasharray="4 3"/>',
           f'<text x="{size / 2}" y="{size - 8}" text-anchor="middle">false positive rate</text>',
           f'<text x="12" y="{size / 2}" text-anchor="middle" transform="rotate(-90 12 {size / 2})">true positive rate</text>']
    for k, (label, pts) in enumerate(curves.items()):
        color = _PALETTE[k % len(_PALETTE)]
        out.append(f'<polyline points="{" ".join(pt(f, t) for f, t in pts)}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{margin + plot - 4}" y="{margin + plot - 6 - 14 * k}" text-anchor="end" fill="{color}">class {escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
