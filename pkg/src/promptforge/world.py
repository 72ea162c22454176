"""Procedural multi-domain glyph world.

Stands in for web-scale pretraining data and the style-shifted evaluation
domains: seven glyph categories rendered under named styles (background
mode, palettes, stroke, rotation, jitter, polarity). Held-out evaluation
domains live in renderer parameter regions (striped backgrounds, inverted
polarity) that no training domain uses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .numerics.rng import RngStream
from .numerics.tenio import read_tensor, write_tensor

RESOLUTION = 32

ROLE_TEACHER = "teacher-train"
ROLE_GENERATOR = "generator-train"
ROLE_HELD_OUT = "held-out-eval"


class WorldError(ValueError):
    pass


class DegenerateGlyphError(WorldError):
    pass


@dataclass(frozen=True)
class CategorySpec:
    name: str
    glyph: str
    size: float = 0.36  # base half-extent as a fraction of image width
    thickness: float = 0.12

    def __post_init__(self):
        if self.size <= 0.0 or self.thickness <= 0.0:
            raise DegenerateGlyphError(f"category {self.name!r}: non-positive glyph parameters")


@dataclass(frozen=True)
class StyleSpec:
    name: str
    background: str = "solid"  # solid | stripes | noise
    bg0: tuple = (0.1, 0.1, 0.1)
    bg1: tuple = (0.3, 0.3, 0.3)
    fg: tuple = (0.9, 0.9, 0.9)
    stroke: float = 1.0        # multiplier on the glyph's stroke thickness
    rotation: float = 0.0      # radians
    jitter: float = 1.0        # scales translation/rotation/size wobble
    invert: bool = False

    def __post_init__(self):
        for palette in (self.bg0, self.bg1, self.fg):
            if any(c < 0.0 or c > 1.0 for c in palette):
                raise WorldError(f"style {self.name!r}: palette component outside [0, 1]")
        if self.background not in ("solid", "stripes", "noise"):
            raise WorldError(f"style {self.name!r}: unknown background {self.background!r}")


@dataclass(frozen=True)
class DomainSpec:
    domain_id: str
    role: str
    styles: tuple

    def style_names(self):
        return [s.name for s in self.styles]


@dataclass
class LabeledImage:
    pixels: np.ndarray  # (32, 32, 3) float64 in [0, 1]
    category: str
    domain: str
    style: str
    seed: int
    rng_label: str


@dataclass(frozen=True)
class WorldSpec:
    categories: tuple
    domains: tuple

    def __post_init__(self):
        names = [c.name for c in self.categories]
        if len(set(names)) != len(names):
            raise WorldError("category names must be unique")
        teacher_styles = set()
        for d in self.domains_with_role(ROLE_TEACHER):
            teacher_styles.update(d.style_names())
        for d in self.domains_with_role(ROLE_HELD_OUT):
            overlap = teacher_styles & set(d.style_names())
            if overlap:
                raise WorldError(f"held-out domain {d.domain_id!r} reuses teacher styles {overlap}")

    def domains_with_role(self, role: str):
        return [d for d in self.domains if d.role == role]

    def domain(self, domain_id: str) -> DomainSpec:
        for d in self.domains:
            if d.domain_id == domain_id:
                return d
        raise WorldError(f"unknown domain {domain_id!r}")

    def category(self, name: str) -> CategorySpec:
        for c in self.categories:
            if c.name == name:
                return c
        raise WorldError(f"unknown category {name!r}")


# ---------------------------------------------------------------------------
# glyph painters: boolean masks over rotated, jittered coordinates

_GRID_Y, _GRID_X = np.mgrid[0:RESOLUTION, 0:RESOLUTION]
_GRID_Y = (_GRID_Y - (RESOLUTION - 1) / 2.0) / RESOLUTION
_GRID_X = (_GRID_X - (RESOLUTION - 1) / 2.0) / RESOLUTION


def _glyph_mask(category: CategorySpec, rotation: float, scale: float,
                dx: float, dy: float, stroke_mult: float) -> np.ndarray:
    size = category.size * scale
    if size <= 0.0:
        raise DegenerateGlyphError(f"category {category.name!r}: zero-area glyph")
    thick = max(category.thickness * scale * stroke_mult, 1.0 / RESOLUTION)
    x = _GRID_X - dx
    y = _GRID_Y - dy
    c, s = np.cos(rotation), np.sin(rotation)
    u = c * x + s * y
    v = -s * x + c * y
    g = category.glyph
    if g == "disc":
        return u * u + v * v <= size * size
    if g == "ring":
        r = np.sqrt(u * u + v * v)
        return np.abs(r - size * 0.8) <= thick * 0.75
    if g == "cross":
        return ((np.abs(u) <= thick * 0.6) & (np.abs(v) <= size)) | \
               ((np.abs(v) <= thick * 0.6) & (np.abs(u) <= size))
    if g == "square":
        return np.maximum(np.abs(u), np.abs(v)) <= size * 0.85
    if g == "triangle":
        # upward triangle: below the two slanted edges, above the base
        return (v <= size * 0.75) & (v >= -size * 0.75 + 1.8 * np.abs(u))
    if g == "diamond":
        return np.abs(u) + np.abs(v) <= size * 1.15
    if g == "arrow":
        head = (u >= 0) & (u <= size) & (np.abs(v) <= (size - u) * 0.9)
        tail = (u <= 0) & (u >= -size) & (np.abs(v) <= thick * 0.55)
        return head | tail
    raise WorldError(f"unknown glyph function {g!r}")


def _background(style: StyleSpec, stream: RngStream) -> np.ndarray:
    bg0 = np.asarray(style.bg0, dtype=np.float64)
    bg1 = np.asarray(style.bg1, dtype=np.float64)
    if style.background == "solid":
        return np.broadcast_to(bg0, (RESOLUTION, RESOLUTION, 3)).copy()
    if style.background == "stripes":
        phase = stream.uniform(0.0, 1.0)
        angle = style.rotation + 0.35
        u = np.cos(angle) * _GRID_X + np.sin(angle) * _GRID_Y + phase
        band = np.floor(u / 0.14).astype(np.int64) % 2
        return np.where(band[..., None] == 0, bg0, bg1)
    # noise: per-pixel blend between the two background colors
    u = stream.uniform(0.0, 1.0, shape=(RESOLUTION, RESOLUTION, 1))
    return bg0 + u * (bg1 - bg0)


def render_glyph(category: CategorySpec, style: StyleSpec, stream: RngStream) -> np.ndarray:
    """Deterministic 32x32x3 image of one category under one style."""
    dx = style.jitter * 0.06 * stream.uniform(-1.0, 1.0)
    dy = style.jitter * 0.06 * stream.uniform(-1.0, 1.0)
    rot = style.rotation + style.jitter * 0.22 * stream.uniform(-1.0, 1.0)
    scale = 1.0 + style.jitter * 0.14 * stream.uniform(-1.0, 1.0)

    mask = _glyph_mask(category, rot, scale, dx, dy, style.stroke)
    area = mask.mean()
    if area <= 0.0:
        raise DegenerateGlyphError(f"category {category.name!r}: zero-area glyph")
    if not (0.10 <= area <= 0.80):
        raise DegenerateGlyphError(
            f"category {category.name!r} style {style.name!r}: glyph area {area:.3f} out of band")

    img = _background(style, stream)
    img[mask] = np.asarray(style.fg, dtype=np.float64)
    if style.invert:
        img = 1.0 - img
    return np.clip(img, 0.0, 1.0)


def render_labeled(world: WorldSpec, domain: DomainSpec, category: CategorySpec,
                   style: StyleSpec, stream: RngStream) -> LabeledImage:
    pixels = render_glyph(category, style, stream)
    return LabeledImage(pixels=pixels, category=category.name, domain=domain.domain_id,
                        style=style.name, seed=stream.seed, rng_label=stream.label)


def build_domain_dataset(world: WorldSpec, domain: DomainSpec, categories,
                         n_per_class: int, stream: RngStream) -> list:
    """Exactly n_per_class images per category, styles cycled uniformly."""
    if n_per_class < 1:
        raise WorldError("n_per_class must be >= 1")
    if not categories or not domain.styles:
        raise WorldError("empty category or style set")
    images = []
    for category in categories:
        for i in range(n_per_class):
            style = domain.styles[i % len(domain.styles)]
            sub = stream.child(f"{domain.domain_id}/{category.name}/{i:05d}")
            images.append(render_labeled(world, domain, category, style, sub))
    return images


def build_caption(category_name: str, style_name: str | None = None) -> str:
    """Caption template; the vanilla form is used for zero-shot prompts."""
    if style_name is None:
        return f"a {category_name}"
    return f"{category_name} in the style of {style_name}"


def few_shot_split(dataset: list, k: int, stream: RngStream) -> tuple[list, list]:
    """k support images per class, the remainder as the query set."""
    by_class: dict[str, list] = {}
    for idx, img in enumerate(dataset):
        by_class.setdefault(img.category, []).append(idx)
    support_idx: list[int] = []
    query_idx: list[int] = []
    for name in sorted(by_class):
        indices = by_class[name]
        if len(indices) <= k:
            raise WorldError(f"class {name!r} has {len(indices)} samples, need > {k}")
        order = stream.child(f"split/{name}").permutation(len(indices))
        chosen = [indices[j] for j in order]
        support_idx.extend(chosen[:k])
        query_idx.extend(chosen[k:])
    support = [dataset[i] for i in sorted(support_idx)]
    query = [dataset[i] for i in sorted(query_idx)]
    return support, query


# ---------------------------------------------------------------------------
# persistence: manifest.json + one .ten file per image


def save_dataset(directory, images) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {"resolution": RESOLUTION, "images": []}
    for i, img in enumerate(images):
        fname = f"img_{i:06d}.ten"
        write_tensor(directory / fname, img.pixels)
        manifest["images"].append({
            "file": fname,
            "category": img.category,
            "domain": img.domain,
            "style": img.style,
            "seed": img.seed,
            "rng_label": img.rng_label,
        })
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=1))


def load_dataset(directory) -> list:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    images = []
    for entry in manifest["images"]:
        pixels = read_tensor(directory / entry["file"])
        images.append(LabeledImage(pixels=pixels, category=entry["category"],
                                   domain=entry["domain"], style=entry["style"],
                                   seed=entry["seed"], rng_label=entry["rng_label"]))
    return images


def pixels_matrix(images) -> np.ndarray:
    """(N, 3072) flattened pixel matrix for encoder input."""
    return np.stack([img.pixels.reshape(-1) for img in images])


def labels_of(images, categories) -> np.ndarray:
    index = {c.name if isinstance(c, CategorySpec) else c: i for i, c in enumerate(categories)}
    return np.asarray([index[img.category] for img in images], dtype=np.int64)


def nearest_centroid_accuracy(train_images, test_images, categories) -> float:
    """Raw-pixel nearest-centroid classifier accuracy (shift diagnostic)."""
    x_train = pixels_matrix(train_images)
    y_train = labels_of(train_images, categories)
    x_test = pixels_matrix(test_images)
    y_test = labels_of(test_images, categories)
    centroids = np.stack([x_train[y_train == c].mean(axis=0)
                          for c in range(len(categories))])
    d = ((x_test[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return float((d.argmin(axis=1) == y_test).mean())


# ---------------------------------------------------------------------------
# the default world


def _style(name, background, bg0, bg1, fg, stroke=1.0, rotation=0.0, jitter=1.0, invert=False):
    return StyleSpec(name=name, background=background, bg0=bg0, bg1=bg1, fg=fg,
                     stroke=stroke, rotation=rotation, jitter=jitter, invert=invert)


DEFAULT_CATEGORIES = (
    CategorySpec("disc", "disc", size=0.30),
    CategorySpec("ring", "ring", size=0.38, thickness=0.13),
    CategorySpec("cross", "cross", size=0.40, thickness=0.16),
    CategorySpec("square", "square", size=0.30),
    CategorySpec("triangle", "triangle", size=0.40),
    CategorySpec("diamond", "diamond", size=0.34),
    CategorySpec("arrow", "arrow", size=0.42, thickness=0.20),
)

DEFAULT_DOMAINS = (
    DomainSpec("studio", ROLE_TEACHER, (
        _style("plain", "solid", (0.12, 0.12, 0.18), (0.12, 0.12, 0.18), (0.92, 0.85, 0.35)),
        _style("tinted", "solid", (0.16, 0.25, 0.42), (0.16, 0.25, 0.42), (0.95, 0.45, 0.40),
               rotation=0.18),
        _style("grainy", "noise", (0.08, 0.10, 0.12), (0.32, 0.34, 0.38), (0.45, 0.90, 0.55)),
        _style("washed", "solid", (0.30, 0.26, 0.34), (0.30, 0.26, 0.34), (0.88, 0.82, 0.95),
               stroke=0.8, rotation=-0.15),
    )),
    DomainSpec("paper", ROLE_TEACHER, (
        _style("pale", "solid", (0.88, 0.86, 0.80), (0.88, 0.86, 0.80), (0.25, 0.22, 0.35)),
        _style("milky", "solid", (0.93, 0.93, 0.96), (0.93, 0.93, 0.96), (0.55, 0.22, 0.30),
               rotation=0.2),
        _style("dotty", "noise", (0.72, 0.75, 0.78), (0.95, 0.96, 0.98), (0.18, 0.38, 0.62)),
        _style("faded", "solid", (0.80, 0.75, 0.68), (0.80, 0.75, 0.68), (0.38, 0.45, 0.28),
               stroke=1.2, rotation=-0.2),
    )),
    DomainSpec("atelier", ROLE_GENERATOR, (
        _style("soft", "solid", (0.70, 0.70, 0.78), (0.70, 0.70, 0.78), (0.22, 0.26, 0.50)),
        _style("vivid", "solid", (0.10, 0.20, 0.24), (0.10, 0.20, 0.24), (0.95, 0.62, 0.22),
               rotation=0.25),
        _style("mono", "noise", (0.14, 0.14, 0.14), (0.42, 0.42, 0.42), (0.95, 0.95, 0.95)),
        _style("dusk", "solid", (0.26, 0.16, 0.30), (0.26, 0.16, 0.30), (0.62, 0.90, 0.88),
               stroke=0.85, rotation=-0.22),
    )),
    DomainSpec("lined", ROLE_HELD_OUT, (
        _style("striped", "stripes", (0.18, 0.22, 0.32), (0.52, 0.50, 0.46), (0.92, 0.34, 0.36)),
        _style("banded", "stripes", (0.20, 0.33, 0.24), (0.62, 0.62, 0.52), (0.32, 0.22, 0.58),
               rotation=0.3),
    )),
    DomainSpec("negative", ROLE_HELD_OUT, (
        _style("inverted", "solid", (0.12, 0.12, 0.18), (0.12, 0.12, 0.18), (0.90, 0.85, 0.38),
               invert=True),
        _style("etched", "noise", (0.10, 0.11, 0.13), (0.34, 0.35, 0.38), (0.50, 0.88, 0.52),
               invert=True, rotation=0.2),
    )),
)

DEFAULT_WORLD = WorldSpec(categories=DEFAULT_CATEGORIES, domains=DEFAULT_DOMAINS)


def world_from_config(cfg: dict) -> WorldSpec:
    """Build a WorldSpec from the config's world section."""
    if cfg.get("preset", "default") == "default" and "domains" not in cfg:
        return DEFAULT_WORLD
    categories = tuple(CategorySpec(**c) for c in cfg["categories"]) \
        if "categories" in cfg else DEFAULT_CATEGORIES
    domains = []
    for d in cfg["domains"]:
        styles = tuple(StyleSpec(name=s["name"], background=s.get("background", "solid"),
                                 bg0=tuple(s.get("bg0", (0.1, 0.1, 0.1))),
                                 bg1=tuple(s.get("bg1", (0.3, 0.3, 0.3))),
                                 fg=tuple(s.get("fg", (0.9, 0.9, 0.9))),
                                 stroke=s.get("stroke", 1.0),
                                 rotation=s.get("rotation", 0.0),
                                 jitter=s.get("jitter", 1.0),
                                 invert=s.get("invert", False))
                       for s in d["styles"])
        domains.append(DomainSpec(d["domain_id"], d["role"], styles))
    return WorldSpec(categories=categories, domains=tuple(domains))


def world_config_dict(world: WorldSpec) -> dict:
    """Round-trippable dict form (used for config hashing)."""
    return {
        "categories": [asdict(c) for c in world.categories],
        "domains": [{"domain_id": d.domain_id, "role": d.role,
                     "styles": [asdict(s) for s in d.styles]} for d in world.domains],
    }
