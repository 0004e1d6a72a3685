"""Script and interactive front end.

One command per line; the same language drives scripts and the REPL.
Reports are JSON with a stable per-entry schema {command, inputs, verdict,
provenance, witnesses, elapsed_ms}; with a pinned seed the elapsed field is
zeroed so reports are byte-identical across runs.  Point-set commands can
render a figure and a CSV next to it.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
import time
from dataclasses import dataclass, field

from . import expr as ex
from .grassmann import SuperElement, pretty_super
from .morphisms import Morphism, coproduct
from .quotients import (
    QuotientSuperRing,
    SuperIdeal,
    UnorientableGenerator,
    ideal_membership,
    is_cinfty_superreduced,
    is_split,
    radical_membership,
)
from .rings import (
    SplitSuperRing,
    apply_smooth,
    associated_graded,
    check_composition_axiom,
    check_projection_axiom,
)
from .spectrum import RPoint, fairfication, find_rpoints, localize, psi_kernel_test
from .verdict import Verdict, jsonable

_RING_RE = re.compile(r"^C\((\d+)\|(\d+)\)$")


class CommandError(Exception):
    """Unusable command text: unknown verb or malformed arguments."""


@dataclass
class Config:
    tol_abs: float = 1e-6
    tol_rel: float = 1e-8
    jet_order: int = 6
    seed: int | None = None
    box: tuple = (-2.0, 2.0)
    grid: int = 40
    json_out: str | None = None
    svg_out: str | None = None

    @property
    def deterministic(self) -> bool:
        return self.seed is not None

    @property
    def seed_value(self) -> int:
        return 0 if self.seed is None else self.seed

    def to_json(self):
        return {"tol_abs": self.tol_abs, "tol_rel": self.tol_rel,
                "jet_order": self.jet_order, "seed": self.seed,
                "box": list(self.box), "grid": self.grid}


def _parse_box(text: str) -> tuple:
    m = re.match(r"^(-?[\d.]+)\.\.(-?[\d.]+)$", text)
    if not m:
        raise CommandError(f"box must look like -2..2, got {text!r}")
    lo, hi = float(m.group(1)), float(m.group(2))
    if not lo < hi:
        raise CommandError("box is empty")
    return (lo, hi)


class Session:
    """Named bindings plus configuration; executes one command at a time."""

    def __init__(self, config: Config | None = None):
        self.config = config or Config()
        self.rings = {}
        self.ideals = {}
        self.elems = {}
        self.morphisms = {}
        self.current = None
        self.entries = []
        self.summary = {}
        self.failures = 0
        self.figures = []
        self._fig_count = 0

    # -- helpers

    def _ring(self, name: str | None):
        if name is None:
            if self.current is None:
                raise CommandError("no ring defined yet")
            return self.rings[self.current]
        if name not in self.rings:
            raise CommandError(f"unknown ring {name!r}")
        return self.rings[name]

    @staticmethod
    def _base(obj) -> SplitSuperRing:
        return obj if isinstance(obj, SplitSuperRing) else obj.ring

    def _element(self, text: str, ring=None):
        obj = ring if ring is not None else self._ring(None)
        text = text.strip()
        if text in self.elems:
            name, el = self.elems[text]
            return el
        return self._base(obj).parse(text)

    def _reduce(self, obj, a: SuperElement) -> SuperElement:
        if isinstance(obj, QuotientSuperRing):
            return obj.normal_form(a)
        return a.map_coefficients(ex.simplify)

    def _bind_entry(self, command, inputs, verdict, provenance="exact",
                    witnesses=(), elapsed_ms=0):
        entry = {"command": command, "inputs": inputs, "verdict": verdict,
                 "provenance": provenance, "witnesses": jsonable(list(witnesses)),
                 "elapsed_ms": elapsed_ms}
        self.entries.append(entry)
        return entry

    def _verdict_entry(self, command, inputs, v: Verdict, elapsed):
        w = []
        if v.witness is not None:
            w.append(v.witness)
        if v.note:
            w.append({"note": v.note})
        return self._bind_entry(command, inputs, v.kind, v.provenance, w, elapsed)

    # -- command implementations

    def execute(self, line: str):
        """Run one command; returns the report entry or None for blanks."""
        text = line.strip()
        if not text or text.startswith("#"):
            return None
        t0 = time.perf_counter()
        verb = text.split(None, 1)[0]
        rest = text[len(verb):].strip()
        handler = getattr(self, f"_cmd_{verb}", None)
        if handler is None:
            raise CommandError(f"unknown command {verb!r}")
        entry = handler(rest)
        if entry is not None and not self.config.deterministic:
            entry["elapsed_ms"] = round((time.perf_counter() - t0) * 1000, 3)
        return entry

    def _cmd_ring(self, rest):
        m = re.match(r"^(\w+)\s*=\s*(.+)$", rest)
        if not m:
            raise CommandError("usage: ring NAME = C(p|q) | ring NAME = BASE / (g1; g2)")
        name, spec = m.group(1), m.group(2).strip()
        sig = _RING_RE.match(spec)
        if sig:
            obj = SplitSuperRing(int(sig.group(1)), int(sig.group(2)))
        else:
            qm = re.match(r"^(\w+)\s*/\s*\((.*)\)$", spec)
            if not qm:
                raise CommandError(f"cannot parse ring spec {spec!r}")
            base = self._ring(qm.group(1))
            gens = [g.strip() for g in qm.group(2).split(";") if g.strip()]
            obj = QuotientSuperRing(self._base(base),
                                    SuperIdeal(self._base(base), gens))
        self.rings[name] = obj
        self.current = name
        return self._bind_entry("ring", {"name": name, "spec": spec}, str(obj))

    def _cmd_ideal(self, rest):
        m = re.match(r"^(\w+)\s*=\s*\((.*)\)\s*(?:in\s+(\w+))?$", rest)
        if not m:
            raise CommandError("usage: ideal NAME = (g1; g2) [in RING]")
        name = m.group(1)
        ring = self._base(self._ring(m.group(3)))
        gens = [g.strip() for g in m.group(2).split(";") if g.strip()]
        ideal = SuperIdeal(ring, gens)
        self.ideals[name] = ideal
        shown = ", ".join(pretty_super(g) for g in ideal.generators)
        return self._bind_entry("ideal", {"name": name, "generators": gens},
                                f"({shown})")

    def _cmd_elem(self, rest):
        m = re.match(r"^(\w+)\s*=\s*(.+?)(?:\s+in\s+(\w+))?$", rest)
        if not m:
            raise CommandError("usage: elem NAME = EXPR [in RING]")
        name, text, ring_name = m.group(1), m.group(2), m.group(3)
        ring_name = ring_name or self.current
        obj = self._ring(ring_name)
        el = self._reduce(obj, self._base(obj).parse(text))
        self.elems[name] = (ring_name, el)
        return self._bind_entry("elem", {"name": name, "expr": text},
                                pretty_super(el))

    def _cmd_apply(self, rest):
        parts = rest.split()
        if len(parts) < 2:
            raise CommandError("usage: apply FUNC ELEM... | apply (EXPR) ELEM...")
        if rest.startswith("("):
            m = re.match(r"^\((.*)\)\s+(.+)$", rest)
            if not m:
                raise CommandError("usage: apply (EXPR) ELEM...")
            names = m.group(2).split()
            h = ex.parse(m.group(1), len(names))
        else:
            func, names = parts[0], parts[1:]
            if func not in ex.FUNCTIONS or func == "bump":
                raise CommandError(f"not a unary smooth function: {func!r}")
            if len(names) != 1:
                raise CommandError(f"{func} takes one element")
            h = ex.Call(1, func, (ex.Var(1, 1),))
        obj = self._ring(None)
        args = [self._element(n) for n in names]
        out = self._reduce(obj, apply_smooth(h, args))
        shown = pretty_super(out)
        self.summary[f"apply {rest}"] = shown
        return self._bind_entry("apply", {"function": ex.pretty(h),
                                          "args": names}, shown)

    def _cmd_nf(self, rest):
        obj = self._ring(None)
        el = self._element(rest)
        shown = pretty_super(self._reduce(obj, el))
        self.summary[rest.strip()] = shown
        return self._bind_entry("nf", {"expr": rest.strip()}, shown)

    def _split_args(self, rest):
        ring_name = None
        kwargs = {}
        for tok in rest.split():
            if "=" in tok:
                k, v = tok.split("=", 1)
                kwargs[k] = v
            else:
                ring_name = tok
        return ring_name, kwargs

    def _cmd_points(self, rest):
        ring_name, kw = self._split_args(rest)
        obj = self._ring(ring_name)
        box = _parse_box(kw["box"]) if "box" in kw else self.config.box
        grid = int(kw["grid"]) if "grid" in kw else self.config.grid
        pts = find_rpoints(obj, box=box, grid_n=grid, seed=self.config.seed_value)
        coords = [list(x.coords) for x in pts]
        files = self._render_points(coords, self._base(obj).p)
        inputs = {"ring": str(obj), "box": list(box), "grid": grid}
        if files:
            inputs["files"] = files
        entry = self._bind_entry("points", inputs, f"{len(pts)} points",
                                 "sampled", coords)
        self.summary["points"] = len(pts)
        return entry

    def _render_points(self, coords, p):
        if not self.config.svg_out or p == 0:
            return None
        self._fig_count += 1
        base = self.config.svg_out
        if self._fig_count > 1:
            stem = base[:-4] if base.endswith(".svg") else base
            base = f"{stem}-{self._fig_count}.svg"
        csv_path = (base[:-4] if base.endswith(".svg") else base) + ".csv"
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axis = plt.subplots(figsize=(4, 4))
        xs = [c[0] for c in coords]
        ys = [c[1] for c in coords] if p > 1 else [0.0] * len(coords)
        axis.scatter(xs, ys, s=6)
        axis.set_xlabel("x1")
        axis.set_ylabel("x2" if p > 1 else "")
        axis.set_title("sampled real points")
        fig.tight_layout()
        fig.savefig(base)
        plt.close(fig)
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{i + 1}" for i in range(p)])
            writer.writerows(coords)
        self.figures.append({"svg": base, "csv": csv_path})
        return {"svg": base, "csv": csv_path}

    def _cmd_split(self, rest):
        ring_name, _ = self._split_args(rest)
        v = is_split(self._ring(ring_name))
        self.summary["split"] = v.kind
        return self._verdict_entry("split", {"ring": str(self._ring(ring_name))},
                                   v, 0)

    def _cmd_superreduced(self, rest):
        ring_name, _ = self._split_args(rest)
        v = is_cinfty_superreduced(self._ring(ring_name), box=self.config.box,
                                   seed=self.config.seed_value)
        self.summary["superreduced"] = v.kind
        return self._verdict_entry("superreduced",
                                   {"ring": str(self._ring(ring_name))}, v, 0)

    def _membership(self, rest, fn, command):
        m = re.match(r"^(.+?)\s+in\s+(\w+)$", rest)
        if not m:
            raise CommandError(f"usage: {command} EXPR in IDEAL")
        text, ideal_name = m.group(1), m.group(2)
        if ideal_name not in self.ideals:
            raise CommandError(f"unknown ideal {ideal_name!r}")
        ideal = self.ideals[ideal_name]
        el = ideal.ring.parse(text)
        if fn is radical_membership:
            v = fn(el, ideal, box=self.config.box, seed=self.config.seed_value)
        else:
            v = fn(el, ideal)
        self.summary[f"{command} {text.strip()}"] = v.kind
        return self._verdict_entry(command, {"expr": text.strip(),
                                             "ideal": ideal_name}, v, 0)

    def _cmd_member(self, rest):
        return self._membership(rest, ideal_membership, "member")

    def _cmd_radical(self, rest):
        return self._membership(rest, radical_membership, "radical")

    def _cmd_axioms(self, rest):
        ring_name, kw = self._split_args(rest)
        obj = self._base(self._ring(ring_name))
        trials = int(kw.get("trials", 50))
        proj = check_projection_axiom(obj, trials=trials,
                                      seed=self.config.seed_value)
        comp = check_composition_axiom(obj, trials=trials,
                                       seed=self.config.seed_value,
                                       tol_rel=self.config.tol_rel)
        ok = proj["verdict"].kind == "Yes" and comp["verdict"].kind == "Yes"
        self.summary["axioms"] = "Yes" if ok else "No"
        return self._bind_entry(
            "axioms", {"ring": str(obj), "trials": trials},
            "Yes" if ok else "No",
            comp["verdict"].provenance,
            [{"projection": proj}, {"composition": comp}])

    def _cmd_psi(self, rest):
        obj = self._ring(None)
        el = self._element(rest)
        v = psi_kernel_test(el, obj, box=self.config.box,
                            grid_n=min(self.config.grid, 20),
                            order=self.config.jet_order,
                            seed=self.config.seed_value)
        self.summary[f"psi {rest.strip()}"] = v.kind
        return self._verdict_entry("psi", {"expr": rest.strip()}, v, 0)

    def _cmd_fair(self, rest):
        obj = self._ring(None)
        probes = [p.strip() for p in rest.split(";") if p.strip()]
        rep = fairfication(obj, probes, box=self.config.box,
                           grid_n=min(self.config.grid, 20),
                           order=self.config.jet_order,
                           seed=self.config.seed_value)
        shown = (f"kept {len(rep['kept'])}, killed {len(rep['killed'])}, "
                 f"unknown {len(rep['unknown'])}")
        self.summary["fair"] = shown
        return self._bind_entry("fair", {"probes": probes}, shown, "sampled",
                                [{"kept": rep["kept"], "killed": rep["killed"],
                                  "unknown": rep["unknown"]}])

    def _cmd_gr(self, rest):
        ring_name, _ = self._split_args(rest)
        g = associated_graded(self._ring(ring_name))
        self.summary["gr"] = str(g)
        return self._bind_entry("gr", {"ring": str(self._ring(ring_name))}, str(g))

    def _cmd_coproduct(self, rest):
        m = re.match(r"^(\w+)\s+(\w+)(?:\s+as\s+(\w+))?$", rest)
        if not m:
            raise CommandError("usage: coproduct A B [as NAME]")
        A, B = self._ring(m.group(1)), self._ring(m.group(2))
        name = m.group(3) or f"{m.group(1)}_{m.group(2)}"
        T, alpha, beta = coproduct(A, B)
        self.rings[name] = T
        self.morphisms[f"{name}_alpha"] = alpha
        self.morphisms[f"{name}_beta"] = beta
        self.current = name
        return self._bind_entry(
            "coproduct", {"left": m.group(1), "right": m.group(2), "name": name},
            str(T), "exact",
            [{"alpha": str(alpha)}, {"beta": str(beta)}])

    def _cmd_mor(self, rest):
        m = re.match(r"^(\w+)\s*:\s*(\w+)\s*->\s*(\w+)\s*=\s*(.*)$", rest)
        if not m:
            raise CommandError("usage: mor NAME : SRC -> TGT = img1; img2; ...")
        name, src_name, tgt_name = m.group(1), m.group(2), m.group(3)
        src, tgt = self._ring(src_name), self._ring(tgt_name)
        images = [s.strip() for s in m.group(4).split(";") if s.strip()]
        base = self._base(src)
        if len(images) != base.p + base.q:
            raise CommandError(
                f"need {base.p + base.q} images for {base}, got {len(images)}")
        phi = Morphism(src, tgt, images[:base.p], images[base.p:])
        self.morphisms[name] = phi
        return self._bind_entry("mor", {"name": name, "images": images},
                                str(phi), phi.validation.provenance)

    def _cmd_morapply(self, rest):
        parts = rest.split(None, 1)
        if len(parts) != 2:
            raise CommandError("usage: morapply PHI ELEM")
        if parts[0] not in self.morphisms:
            raise CommandError(f"unknown morphism {parts[0]!r}")
        phi = self.morphisms[parts[0]]
        el = self._element(parts[1], phi.source)
        shown = pretty_super(phi.apply(el))
        self.summary[f"morapply {rest.strip()}"] = shown
        return self._bind_entry("morapply", {"morphism": parts[0],
                                             "expr": parts[1]}, shown)

    def _cmd_localize(self, rest):
        m = re.match(r"^(.+?)\s+at\s+([-\d.,\s]+?)(?:\s+order=(\d+))?$", rest)
        if not m:
            raise CommandError("usage: localize EXPR at c1,c2 [order=k]")
        obj = self._ring(None)
        el = self._reduce(obj, self._element(m.group(1)))
        coords = tuple(float(c) for c in m.group(2).split(",") if c.strip())
        order = int(m.group(3)) if m.group(3) else self.config.jet_order
        x = RPoint(obj, coords)
        jet = localize(el, x, order=order)
        shown = str(jet)
        self.summary[f"localize {m.group(1).strip()}"] = shown
        return self._bind_entry(
            "localize", {"expr": m.group(1).strip(), "point": list(coords),
                         "order": order},
            shown, "exact" if jet.exact else "sampled")

    def _cmd_assert(self, rest):
        m = re.match(r"^(.+?)\s+is\s+(\w+)$", rest)
        eq = re.match(r"^(nf|apply|morapply)\s+(.+?)\s*==\s*(.+)$", rest)
        if eq:
            sub = self.execute(f"{eq.group(1)} {eq.group(2)}")
            got = sub["verdict"]
            obj = self._ring(None)
            want = pretty_super(self._reduce(obj, self._element(eq.group(3))))
            ok = got == want
            detail = {"got": got, "want": want}
        elif m:
            sub = self.execute(m.group(1))
            got = sub["verdict"]
            ok = got == m.group(2)
            detail = {"got": got, "want": m.group(2)}
        else:
            raise CommandError("usage: assert CMD is KIND | assert nf E == E")
        if not ok:
            self.failures += 1
        return self._bind_entry("assert", {"claim": rest}, "PASS" if ok else "FAIL",
                                "exact", [detail])

    def _cmd_quit(self, rest):
        return None

    # -- report

    def report(self) -> dict:
        return {"config": self.config.to_json(),
                "entries": self.entries,
                "summary": self.summary,
                "failures": self.failures}


def run_script(path: str, config: Config | None = None):
    """Execute a command file; returns (exit_code, report)."""
    session = Session(config)
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as err:
        return 2, {"error": str(err)}
    for lineno, line in enumerate(lines, start=1):
        if line.strip() == "quit":
            break
        try:
            session.execute(line)
        except (CommandError, ex.ParseError) as err:
            report = session.report()
            report["error"] = f"line {lineno}: {err}"
            return 2, report
        except (ValueError, RuntimeError, UnorientableGenerator) as err:
            session._bind_entry("error", {"line": lineno, "text": line.strip()},
                                f"ERROR: {err}")
            session.failures += 1
    report = session.report()
    return (1 if session.failures else 0), report


def repl(config: Config | None = None, stdin=None, stdout=None):
    """Interactive loop over the same command language."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    session = Session(config)
    stdout.write("supersmooth repl; quit to exit\n")
    for line in stdin:
        if line.strip() in ("quit", "exit"):
            break
        try:
            entry = session.execute(line)
        except (CommandError, ex.ParseError) as err:
            stdout.write(f"error: {err}\n")
            continue
        except (ValueError, RuntimeError) as err:
            stdout.write(f"error: {err}\n")
            continue
        if entry is not None:
            stdout.write(f"{entry['verdict']}\n")
    return session


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="supersmooth",
        description="calculator for supercommutative smooth-coefficient algebra")
    parser.add_argument("script", nargs="?", help="command file; omit for a REPL")
    parser.add_argument("--tol-abs", type=float, default=1e-6)
    parser.add_argument("--tol-rel", type=float, default=1e-8)
    parser.add_argument("--jet-order", type=int, default=6)
    parser.add_argument("--seed", type=int, default=None,
                        help="pin the seed; also zeroes elapsed_ms in reports")
    parser.add_argument("--box", type=str, default="-2..2")
    parser.add_argument("--grid", type=int, default=40)
    parser.add_argument("--json-out", type=str, default=None)
    parser.add_argument("--svg-out", type=str, default=None)
    try:
        args = parser.parse_args(argv)
        box = _parse_box(args.box)
    except CommandError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except SystemExit as err:
        return 2 if err.code else 0
    config = Config(tol_abs=args.tol_abs, tol_rel=args.tol_rel,
                    jet_order=args.jet_order, seed=args.seed, box=box,
                    grid=args.grid, json_out=args.json_out,
                    svg_out=args.svg_out)
    if args.script is None:
        repl(config)
        return 0
    code, report = run_script(args.script, config)
    blob = json.dumps(report, indent=2, sort_keys=True)
    if config.json_out:
        with open(config.json_out, "w") as fh:
            fh.write(blob + "\n")
    else:
        print(blob)
    if "error" in report:
        print(f"error: {report['error']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
