"""Robot description: links, revolute joints and named frames of a floating-base tree."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .spatial import rpy_to_matrix


class ModelError(ValueError):
    """Raised for malformed robot descriptions."""


class UnknownFrameError(KeyError):
    pass


@dataclass(frozen=True)
class Link:
    name: str
    mass: float
    com: np.ndarray
    inertia: np.ndarray  # about the COM, link axes


@dataclass(frozen=True)
class Joint:
    name: str
    parent: str
    child: str
    axis: np.ndarray
    origin: np.ndarray  # joint location in the parent link frame
    lower: float = -np.inf
    upper: float = np.inf
    effort: float = np.inf


@dataclass(frozen=True)
class Frame:
    name: str
    link: str
    offset: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    kind: str = ""


@dataclass(frozen=True, eq=False)
class RobotModel:
    """Kinematic tree with a 6-DOF free base.

    Joints are revolute and listed parent-before-child; their order defines
    the ordering of the actuated coordinates.  Link ``i`` of the internal
    arrays is driven by joint ``i - 1``; link 0 is the base.
    """

    name: str
    base: Link
    links: tuple[Link, ...]
    joints: tuple[Joint, ...]
    frames: tuple[Frame, ...]
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))

    def __post_init__(self):
        link_by_name = {self.base.name: self.base}
        for link in self.links:
            if link.name in link_by_name:
                raise ModelError(f"duplicate link name {link.name!r}")
            link_by_name[link.name] = link
        for link in link_by_name.values():
            if not link.mass > 0.0:
                raise ModelError(f"link {link.name!r}: mass must be positive")
            inertia = np.asarray(link.inertia)
            if inertia.shape != (3, 3) or not np.allclose(inertia, inertia.T, atol=1e-12):
                raise ModelError(f"link {link.name!r}: inertia must be a symmetric 3x3 matrix")
            if np.linalg.eigvalsh(inertia).min() <= 0.0:
                raise ModelError(f"link {link.name!r}: inertia must be positive definite")

        order = [self.base.name]
        parent_idx = [-1]
        seen_children = set()
        for joint in self.joints:
            if joint.child in seen_children or joint.child == self.base.name:
                raise ModelError(f"joint {joint.name!r}: link {joint.child!r} already has a parent")
            if joint.child not in link_by_name:
                raise ModelError(f"joint {joint.name!r}: unknown child link {joint.child!r}")
            if joint.parent not in order:
                raise ModelError(
                    f"joint {joint.name!r}: parent {joint.parent!r} must be the base or the child of an earlier joint"
                )
            if np.linalg.norm(joint.axis) == 0.0:
                raise ModelError(f"joint {joint.name!r}: zero axis")
            if joint.lower > joint.upper:
                raise ModelError(f"joint {joint.name!r}: lower limit above upper limit")
            seen_children.add(joint.child)
            parent_idx.append(order.index(joint.parent))
            order.append(joint.child)
        orphans = set(link_by_name) - set(order)
        if orphans:
            raise ModelError(f"links not connected to the tree: {sorted(orphans)}")

        ordered = [link_by_name[name] for name in order]
        object.__setattr__(self, "_link_index", {name: i for i, name in enumerate(order)})
        object.__setattr__(self, "parent", np.array(parent_idx, dtype=np.int64))
        axes = np.zeros((len(order), 3))
        origins = np.zeros((len(order), 3))
        for i, joint in enumerate(self.joints, start=1):
            axes[i] = np.asarray(joint.axis, dtype=float) / np.linalg.norm(joint.axis)
            origins[i] = joint.origin
        object.__setattr__(self, "joint_axis", axes)
        object.__setattr__(self, "joint_origin", origins)
        object.__setattr__(self, "link_mass", np.array([l.mass for l in ordered]))
        object.__setattr__(self, "link_com", np.array([np.asarray(l.com, float) for l in ordered]))
        object.__setattr__(self, "link_inertia", np.array([np.asarray(l.inertia, float) for l in ordered]))
        object.__setattr__(self, "gravity", np.asarray(self.gravity, dtype=float))

        frame_map = {}
        for link_name, idx in self._link_index.items():
            frame_map[link_name] = (idx, np.zeros(3), np.eye(3))
        for fr in self.frames:
            if fr.link not in self._link_index:
                raise ModelError(f"frame {fr.name!r}: unknown link {fr.link!r}")
            if fr.name in frame_map and fr.name not in self._link_index:
                raise ModelError(f"duplicate frame name {fr.name!r}")
            frame_map[fr.name] = (
                self._link_index[fr.link],
                np.asarray(fr.offset, dtype=float),
                np.asarray(fr.rotation, dtype=float),
            )
        object.__setattr__(self, "_frames", frame_map)

    @property
    def n(self) -> int:
        """Number of actuated joints."""
        return len(self.joints)

    @property
    def nv(self) -> int:
        return self.n + 6

    @property
    def total_mass(self) -> float:
        return float(self.link_mass.sum())

    @property
    def joint_names(self) -> list[str]:
        return [j.name for j in self.joints]

    @property
    def tau_min(self) -> np.ndarray:
        return np.array([-j.effort for j in self.joints])

    @property
    def tau_max(self) -> np.ndarray:
        return np.array([j.effort for j in self.joints])

    def frame_names(self, kind: str | None = None) -> list[str]:
        return [f.name for f in self.frames if kind is None or f.kind == kind]

    def has_frame(self, name: str) -> bool:
        return name in self._frames

    def frame(self, name: str) -> tuple[int, np.ndarray, np.ndarray]:
        """``(link index, offset, rotation)`` of a named frame or link."""
        try:
            return self._frames[name]
        except KeyError:
            raise UnknownFrameError(f"unknown frame {name!r}") from None

    def link_index(self, name: str) -> int:
        return self._link_index[name]

    def joint_index(self, name: str) -> int:
        for i, j in enumerate(self.joints):
            if j.name == name:
                return i
        raise KeyError(name)

    def supporting_joints(self, frame: str) -> list[int]:
        """Actuated joint indices on the path from the base to ``frame``."""
        link = self.frame(frame)[0]
        out = []
        while link > 0:
            out.append(link - 1)
            link = int(self.parent[link])
        return sorted(out)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        def link_d(l: Link) -> dict:
            return {"name": l.name, "mass": l.mass, "com": list(map(float, l.com)),
                    "inertia": np.asarray(l.inertia).tolist()}

        return {
            "name": self.name,
            "gravity": self.gravity.tolist(),
            "base": link_d(self.base),
            "links": [link_d(l) for l in self.links],
            "joints": [
                {"name": j.name, "parent": j.parent, "child": j.child,
                 "axis": list(map(float, j.axis)), "origin": list(map(float, j.origin)),
                 "limits": {"lower": j.lower, "upper": j.upper, "effort": j.effort}}
                for j in self.joints
            ],
            "frames": [
                {"name": f.name, "link": f.link, "offset": list(map(float, f.offset)),
                 "rotation": np.asarray(f.rotation).tolist(), "kind": f.kind}
                for f in self.frames
            ],
        }


MODEL_SCHEMA = {
    "type": "object",
    "required": ["name", "base", "links", "joints"],
    "properties": {
        "name": {"type": "string"},
        "gravity": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
        "base": {"$ref": "#/definitions/link"},
        "links": {"type": "array", "items": {"$ref": "#/definitions/link"}},
        "joints": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "parent", "child", "axis", "origin"],
                "properties": {
                    "name": {"type": "string"},
                    "parent": {"type": "string"},
                    "child": {"type": "string"},
                    "axis": {"$ref": "#/definitions/vec3"},
                    "origin": {"$ref": "#/definitions/vec3"},
                    "limits": {
                        "type": "object",
                        "properties": {
                            "lower": {"type": "number"},
                            "upper": {"type": "number"},
                            "effort": {"type": "number", "exclusiveMinimum": 0},
                        },
                    },
                },
            },
        },
        "frames": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "link", "offset"],
                "properties": {
                    "name": {"type": "string"},
                    "link": {"type": "string"},
                    "offset": {"$ref": "#/definitions/vec3"},
                    "rotation": {"$ref": "#/definitions/mat3"},
                    "rpy": {"$ref": "#/definitions/vec3"},
                    "kind": {"type": "string"},
                },
            },
        },
    },
    "definitions": {
        "vec3": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
        "mat3": {"type": "array", "items": {"$ref": "#/definitions/vec3"}, "minItems": 3, "maxItems": 3},
        "link": {
            "type": "object",
            "required": ["name", "mass", "com", "inertia"],
            "properties": {
                "name": {"type": "string"},
                "mass": {"type": "number", "exclusiveMinimum": 0},
                "com": {"$ref": "#/definitions/vec3"},
                "inertia": {
                    "oneOf": [{"$ref": "#/definitions/mat3"}, {"$ref": "#/definitions/vec3"}]
                },
            },
        },
    },
}


def _inertia(value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    return np.diag(arr) if arr.shape == (3,) else arr


def model_from_dict(doc: dict) -> RobotModel:
    import jsonschema

    try:
        jsonschema.validate(doc, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ModelError(f"model field {where}: {exc.message}") from None

    def link(d: dict) -> Link:
        return Link(d["name"], float(d["mass"]), np.asarray(d["com"], float), _inertia(d["inertia"]))

    joints = []
    for d in doc["joints"]:
        lim = d.get("limits", {})
        joints.append(
            Joint(
                d["name"], d["parent"], d["child"],
                np.asarray(d["axis"], float), np.asarray(d["origin"], float),
                float(lim.get("lower", -np.inf)), float(lim.get("upper", np.inf)),
                float(lim.get("effort", np.inf)),
            )
        )
    frames = []
    for d in doc.get("frames", []):
        if "rotation" in d:
            rot = np.asarray(d["rotation"], float)
        else:
            rot = rpy_to_matrix(d.get("rpy", [0.0, 0.0, 0.0]))
        frames.append(Frame(d["name"], d["link"], np.asarray(d["offset"], float), rot, d.get("kind", "")))
    return RobotModel(
        name=doc["name"],
        base=link(doc["base"]),
        links=tuple(link(d) for d in doc["links"]),
        joints=tuple(joints),
        frames=tuple(frames),
        gravity=np.asarray(doc.get("gravity", [0.0, 0.0, -9.81]), float),
    )


def load_model(path: str | Path) -> RobotModel:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return model_from_dict(doc)


def default_model_path() -> Path:
    return Path(str(resources.files("quadwbc") / "data" / "default_quadruped.json"))


_DEFAULT: RobotModel | None = None


def default_model() -> RobotModel:
    """The desk-scale quadruped shipped with the package (cached)."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_model(default_model_path())
    return _DEFAULT


LEGS = ("LF", "RF", "LH", "RH")


def foot_frame(leg: str) -> str:
    return f"{leg}_FOOT"


def leg_joints(model: RobotModel, leg: str) -> list[int]:
    return model.supporting_joints(foot_frame(leg))
