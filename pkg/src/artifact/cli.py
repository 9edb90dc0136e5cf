"""Verification command line: every command echoes its full numeric
configuration into the output header, renders one table in CSV or JSON,
and reports tolerance gates as PASS/FAIL lines.

Expensive evaluations go through a JSON result cache keyed by a content
hash of the command and its numeric configuration; a stored entry is
reused only when it was computed at no lower precision and no smaller
truncation than requested.  Decimal strings carry the full working
precision, so cache round trips do not move any reported digit.
"""

import datetime
import hashlib
import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import click
from mpmath import mp

from . import __version__
from .arithsums import make_context, sigma_prime_A, sigma_table
from .core import DEFAULT_PREC, Params
from .fourier import (
    FourierParams,
    a_fin,
    a_fin_ledger,
    a_inf,
    dim_cusp_forms,
    find_relation,
)
from .green import GreenConfig, identity_residual, rho_class_sum, rho_class_sum_closed
from .heckechar import build_chi, theta_coeffs
from .lseries import (
    bundled_eigenform,
    central_derivative,
    ingest_eigenform,
    lambda_completed,
    rs_coefficients,
)
from .quadfield import class_group, ideals_of_norm
from .special import Q_kt_closed, Q_kt_oracle, q_kt_derivs

KT_GRID = ((2, 0), (2, 1), (3, 1), (3, 2), (4, 2))
X_GRID = ("1.01", "1.5", "3", "10", "100")


def _dps(pr):
    return max(6, int(pr * 0.30103) + 2)


def _dec(v, pr):
    return mp.nstr(v, _dps(pr)).replace(" ", "")


# ---------------------------------------------------------------------------
# run configuration, cache, table emission


@dataclass(frozen=True)
class RunConfig:
    """One command invocation: everything here is echoed to the output
    metadata so a table is reproducible from its own header."""

    command: str
    precision: int
    options: dict
    fmt: str = "csv"
    output: str = None
    cache_dir: str = None
    strict: bool = False
    no_cache: bool = False


class ResultCache:
    """One JSON document per key under the cache directory."""

    def __init__(self, root):
        self.root = Path(root) if root else None
        self.hits = 0
        self.misses = 0

    @staticmethod
    def _key(cfg):
        blob = json.dumps(cfg, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:32]

    def load(self, cfg, prec, truncation):
        if self.root is None:
            return None
        path = self.root / f"{self._key(cfg)}.json"
        if not path.exists():
            return None
        try:
            doc = json.loads(path.read_text())
            if doc["prec"] < prec:
                return None
            stored_tr = doc["truncation"]
            if truncation is not None and (stored_tr is None or stored_tr < truncation):
                return None
            with mp.workprec(max(doc["prec"], prec) + 16):
                values = {
                    name: mp.mpc(mp.mpf(v["re"]), mp.mpf(v["im"]))
                    if v["im"] != "0" else mp.mpf(v["re"])
                    for name, v in doc["values"].items()
                }
        except (KeyError, TypeError, ValueError, json.JSONDecodeError):
            click.echo(f"warning: corrupt cache entry {path.name}, recomputing",
                       err=True)
            return None
        self.hits += 1
        return values

    def store(self, cfg, prec, truncation, values):
        if self.root is None:
            return
        self.misses += 1
        self.root.mkdir(parents=True, exist_ok=True)
        digits = _dps(prec) + 10
        doc = {
            "config": cfg,
            "prec": prec,
            "truncation": truncation,
            "values": {
                name: {"re": mp.nstr(mp.re(v), digits),
                       "im": mp.nstr(mp.im(v), digits) if mp.im(v) else "0"}
                for name, v in values.items()
            },
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        }
        path = self.root / f"{self._key(cfg)}.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str))
        os.replace(tmp, path)

    def fetch(self, cfg, prec, truncation, compute):
        got = self.load(cfg, prec, truncation)
        if got is not None:
            return got
        values = compute()
        self.store(cfg, prec, truncation, values)
        return values


def emit(rc, columns, rows, checks=()):
    """Write the table with its metadata header; returns overall pass."""
    ok = all(flag for _, flag in checks)
    result = "PASS" if ok else "FAIL"
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    if rc.fmt == "csv":
        lines = [f"# command = {rc.command}",
                 f"# version = {__version__}",
                 f"# precision = {rc.precision}"]
        lines += [f"# {k} = {v}" for k, v in sorted(rc.options.items())]
        lines += [f"# check {name} = {'PASS' if flag else 'FAIL'}"
                  for name, flag in checks]
        lines.append(f"# result = {result}")
        lines.append(f"# timestamp = {stamp}")
        lines.append(",".join(columns))
        lines += [",".join(str(c) for c in row) for row in rows]
        text = "\n".join(lines) + "\n"
    else:
        doc = {
            "metadata": {"command": rc.command, "version": __version__,
                         "precision": rc.precision,
                         **{k: v for k, v in sorted(rc.options.items())},
                         "timestamp": stamp},
            "checks": {name: ("PASS" if flag else "FAIL")
                       for name, flag in checks},
            "result": result,
            "columns": list(columns),
            "table": [[str(c) for c in row] for row in rows],
        }
        text = json.dumps(doc, indent=2, default=str) + "\n"
    if rc.output:
        Path(rc.output).write_text(text)
    else:
        click.echo(text, nl=False)
    return ok


def finish(rc, cache, ok):
    if cache.root is not None:
        click.echo(f"cache: {cache.hits} hits, {cache.misses} misses", err=True)
    if rc.strict and not ok:
        raise SystemExit(1)


def common_options(fn):
    for opt in reversed([
        click.option("--prec", type=int, default=DEFAULT_PREC,
                     show_default=True, help="working precision in bits"),
        click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
                     default="csv", show_default=True, help="table format"),
        click.option("--output", type=click.Path(dir_okay=False), default=None,
                     help="write the table to this file instead of stdout"),
        click.option("--cache-dir", envvar="ARTIFACT_CACHE_DIR", default=None,
                     help="result cache directory (env ARTIFACT_CACHE_DIR)"),
        click.option("--no-cache", is_flag=True, help="bypass the result cache"),
        click.option("--strict", is_flag=True,
                     help="exit 1 if any tolerance gate fails"),
    ]):
        fn = opt(fn)
    return fn


def make_rc(command, prec, fmt, output, cache_dir, no_cache, strict, options):
    if prec < 64:
        raise click.UsageError("precision below 64 bits is not supported")
    rc = RunConfig(command=command, precision=prec, options=options, fmt=fmt,
                   output=output, cache_dir=cache_dir, strict=strict,
                   no_cache=no_cache)
    cache = ResultCache(None if no_cache else cache_dir)
    return rc, cache


def _the_class(D, index):
    G = class_group(D)
    if not 0 <= index < len(G.classes):
        raise click.UsageError(
            f"class index {index} out of range for h({D}) = {len(G.classes)}")
    return G.classes[index]


def _default_orientation(D, N):
    return next(b for b in range(1, 2 * N + 1) if (b * b - D) % (4 * N) == 0)


def _load_form(form_path, weight, level):
    f = ingest_eigenform(form_path) if form_path else bundled_eigenform()
    if f.weight != weight or f.level != level:
        raise click.UsageError(
            f"eigenform is weight {f.weight} level {f.level}, "
            f"need weight {weight} level {level}")
    return f


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None,
              help="JSON file of per-command flag defaults, keyed by command name")
@click.pass_context
def main(ctx, config_path):
    """Numeric verification suite for the CM height identities."""
    if config_path:
        ctx.default_map = json.loads(Path(config_path).read_text())


# ---------------------------------------------------------------------------
# commands


@main.command("special-suite")
@common_options
def special_suite(prec, fmt, output, cache_dir, no_cache, strict):
    """Route agreement and ODE residuals for the kernel profile Q."""
    rc, cache = make_rc("special-suite", prec, fmt, output, cache_dir,
                        no_cache, strict, {"kt_grid": list(KT_GRID),
                                           "x_grid": list(X_GRID)})
    rows = []
    worst_route = mp.mpf(0)
    worst_ode = mp.mpf(0)
    with mp.workprec(prec):
        for k, t in KT_GRID:
            for xs in X_GRID:
                x = mp.mpf(xs)
                closed = Q_kt_closed(k, t, x, prec=prec)
                hyp = Q_kt_oracle(k, t, x, "hypergeometric", prec=prec)
                quad = Q_kt_oracle(k, t, x, "quadrature", prec=prec)
                r1 = abs(closed - hyp) / abs(closed)
                r2 = abs(closed - quad) / abs(closed)
                q0, q1, q2 = q_kt_derivs(k, t, x, prec=prec)
                ode = abs((1 - x * x) * q2 + (2 * t - (2 * t + 2) * x) * q1
                          + (k - t - 1) * (k + t) * q0) / max(abs(q0), mp.mpf(1))
                worst_route = max(worst_route, r1, r2)
                worst_ode = max(worst_ode, ode)
                rows.append([k, t, xs, _dec(closed, prec), _dec(r1, prec),
                             _dec(r2, prec), _dec(ode, prec)])
    checks = [("route-agreement-1e-25", worst_route <= mp.mpf("1e-25")),
              ("ode-residual-1e-20", worst_ode <= mp.mpf("1e-20"))]
    ok = emit(rc, ["k", "t", "x", "q_closed", "rel_hypergeometric",
                   "rel_quadrature", "ode_residual"], rows, checks)
    finish(rc, cache, ok)


@main.command("classgroup")
@click.option("--D", "D", type=int, required=True, help="field discriminant")
@common_options
def classgroup_cmd(D, prec, fmt, output, cache_dir, no_cache, strict):
    """Reduced-form class group listing."""
    rc, cache = make_rc("classgroup", prec, fmt, output, cache_dir, no_cache,
                        strict, {"D": D})
    G = class_group(D)
    rows = [[i, c.a, c.b, c.c, c.order()] for i, c in enumerate(G.classes)]
    rc.options["h"] = len(G.classes)
    ok = emit(rc, ["index", "a", "b", "c", "order"], rows)
    finish(rc, cache, ok)


@main.command("theta")
@click.option("--D", "D", type=int, required=True)
@click.option("--t", "t", type=int, required=True, help="character type")
@click.option("--upto", type=int, default=50, show_default=True)
@click.option("--cls-index", type=int, default=0, show_default=True)
@click.option("--branch", type=int, default=0, show_default=True)
@common_options
def theta_cmd(D, t, upto, cls_index, branch, prec, fmt, output, cache_dir,
              no_cache, strict):
    """Partial theta coefficients r(n) for one ideal class."""
    rc, cache = make_rc("theta", prec, fmt, output, cache_dir, no_cache,
                        strict, {"D": D, "t": t, "upto": upto,
                                 "cls_index": cls_index, "branch": branch})
    chi = build_chi(D, t, branch=branch)
    cls = _the_class(D, cls_index)
    table = theta_coeffs(chi, cls, upto, prec=prec)
    rows = []
    for n in range(1, upto + 1):
        v = table[n]
        z = v.to_mpc(prec)
        exact = f"{v.x};{v.y}" if v.is_exact else ""
        rows.append([n, _dec(z.real, prec), _dec(z.imag, prec), exact])
    ok = emit(rc, ["n", "re", "im", "exact"], rows)
    finish(rc, cache, ok)


@main.command("sigma-table")
@click.option("--D", "D", type=int, required=True)
@click.option("--N", "N", type=int, required=True, help="level")
@click.option("--beta", type=int, default=None, help="orientation class mod 2N")
@click.option("--upto", type=int, default=50, show_default=True)
@click.option("--cls-index", type=int, default=0, show_default=True)
@common_options
def sigma_cmd(D, N, beta, upto, cls_index, prec, fmt, output, cache_dir,
              no_cache, strict):
    """Genus-twisted divisor sums sigma(n) and the log ledgers sigma'(n)."""
    if beta is None:
        beta = _default_orientation(D, N)
    rc, cache = make_rc("sigma-table", prec, fmt, output, cache_dir, no_cache,
                        strict, {"D": D, "N": N, "beta": beta, "upto": upto,
                                 "cls_index": cls_index})
    ctx = make_context(D, N, beta, _the_class(D, cls_index))
    sig = sigma_table(ctx, upto)
    rows = []
    for n in range(1, upto + 1):
        led = sigma_prime_A(ctx, n)
        led_s = ";".join(f"log{q}:{c}" for q, c in led.terms) or "0"
        rows.append([n, int(sig[n]), led_s])
    ok = emit(rc, ["n", "sigma", "sigma_prime"], rows)
    finish(rc, cache, ok)


def _fourier_values(fp, m, prec):
    inf = a_inf(fp, m, prec=prec)
    fin = a_fin(fp, m, prec=prec)
    return {"fin": fin, "inf": inf.value, "total": fin + inf.value,
            "tail": inf.tail}


@main.command("fourier-table")
@click.option("--k", "k", type=int, required=True)
@click.option("--t", "t", type=int, required=True)
@click.option("--N", "N", type=int, required=True)
@click.option("--D", "D", type=int, required=True)
@click.option("--m-from", type=int, default=1, show_default=True)
@click.option("--m-to", type=int, default=10, show_default=True)
@click.option("--n0", type=int, default=10000, show_default=True,
              help="shell truncation of the archimedean sum")
@click.option("--beta", type=int, default=None)
@click.option("--cls-index", type=int, default=0, show_default=True)
@click.option("--branch", type=int, default=0, show_default=True)
@common_options
def fourier_cmd(k, t, N, D, m_from, m_to, n0, beta, cls_index, branch, prec,
                fmt, output, cache_dir, no_cache, strict):
    """Holomorphic-projection coefficients a_m over an index range."""
    chi = build_chi(D, t, branch=branch)
    cls = _the_class(D, cls_index)
    fp = FourierParams(Params(k, t, N, D), chi, cls, n0=n0, beta=beta)
    rc, cache = make_rc("fourier-table", prec, fmt, output, cache_dir,
                        no_cache, strict,
                        {"k": k, "t": t, "N": N, "D": D, "m_from": m_from,
                         "m_to": m_to, "n0": n0, "beta": fp.beta,
                         "cls_index": cls_index, "branch": branch})
    rows = []
    for m in range(m_from, m_to + 1):
        if math.gcd(m, N) != 1:
            continue
        key = {"op": "fourier-coefficient", "k": k, "t": t, "N": N, "D": D,
               "beta": fp.beta, "branch": branch, "cls_index": cls_index,
               "m": m}
        vals = cache.fetch(key, prec, n0,
                           lambda m=m: _fourier_values(fp, m, prec))
        rows.append([m] + [_dec(vals[c], prec)
                           for c in ("fin", "inf", "total", "tail")])
    ok = emit(rc, ["m", "a_fin", "a_inf", "a_total", "tail"], rows)
    finish(rc, cache, ok)


@main.command("green-identity")
@click.option("--k", "k", type=int, required=True)
@click.option("--t", "t", type=int, required=True)
@click.option("--N", "N", type=int, required=True)
@click.option("--D", "D", type=int, required=True)
@click.option("--m", "m", type=int, required=True)
@click.option("--n-max", type=int, default=300, show_default=True,
              help="lattice shell cutoff")
@click.option("--beta", type=int, default=None)
@click.option("--cls-index", type=int, default=0, show_default=True)
@click.option("--branch", type=int, default=0, show_default=True)
@click.option("--diagonal", type=click.Choice(["auto", "exclude", "regularize"]),
              default="auto", show_default=True)
@click.option("--tol", type=float, default=1e-6, show_default=True)
@common_options
def green_cmd(k, t, N, D, m, n_max, beta, cls_index, branch, diagonal, tol,
              prec, fmt, output, cache_dir, no_cache, strict):
    """Archimedean height identity residual for one Hecke index."""
    cls = _the_class(D, cls_index)
    if diagonal == "auto":
        diagonal = ("regularize"
                    if any(jc == cls for _, jc in ideals_of_norm(D, m))
                    else "exclude")
    chi = build_chi(D, t, branch=branch)
    cfg = GreenConfig(Params(k, t, N, D), n_max=n_max, prec=prec,
                      diagonal=diagonal, beta=beta)
    rc, cache = make_rc("green-identity", prec, fmt, output, cache_dir,
                        no_cache, strict,
                        {"k": k, "t": t, "N": N, "D": D, "m": m,
                         "n_max": n_max, "beta": cfg.beta,
                         "cls_index": cls_index, "branch": branch,
                         "diagonal": diagonal, "tol": tol})
    key = {"op": "green-identity", "k": k, "t": t, "N": N, "D": D, "m": m,
           "beta": cfg.beta, "branch": branch, "cls_index": cls_index,
           "diagonal": diagonal}
    vals = cache.fetch(
        key, prec, n_max,
        lambda: {"residual": identity_residual(cfg, chi, m, cls, prec=prec)})
    res = vals["residual"]
    passed = abs(res) <= mp.mpf(tol)
    rows = [[m, _dec(res, prec), mp.nstr(mp.mpf(tol), 8),
             "PASS" if passed else "FAIL"]]
    ok = emit(rc, ["m", "residual", "tolerance", "status"],
              rows, [("identity-residual", passed)])
    finish(rc, cache, ok)


@main.command("chowla")
@click.option("--k", "k", type=int, required=True)
@click.option("--t", "t", type=int, required=True)
@click.option("--D", "D", type=int, required=True)
@click.option("--tol", type=float, default=1e-8, show_default=True)
@common_options
def chowla_cmd(k, t, D, tol, prec, fmt, output, cache_dir, no_cache, strict):
    """Class-sum limit constant: eta products against the L-derivative."""
    rc, cache = make_rc("chowla", prec, fmt, output, cache_dir, no_cache,
                        strict, {"k": k, "t": t, "D": D, "tol": tol})
    key = {"op": "chowla", "k": k, "t": t, "D": D}
    vals = cache.fetch(
        key, prec, None,
        lambda: {"lhs": rho_class_sum(k, t, D, prec=prec),
                 "rhs": rho_class_sum_closed(k, t, D, prec=prec)})
    h = len(class_group(D).classes)
    res = abs(vals["lhs"] - vals["rhs"]) / h
    passed = res <= mp.mpf(tol)
    rows = [[D, _dec(vals["lhs"], prec), _dec(vals["rhs"], prec),
             _dec(res, prec), "PASS" if passed else "FAIL"]]
    ok = emit(rc, ["D", "class_sum", "closed_form", "residual", "status"],
              rows, [("limit-constant", passed)])
    finish(rc, cache, ok)


@main.command("algebraicity")
@click.option("--k", "k", type=int, required=True)
@click.option("--t", "t", type=int, required=True)
@click.option("--N", "N", type=int, required=True)
@click.option("--D", "D", type=int, required=True)
@click.option("--support", default="2,4,5,7", show_default=True,
              help="comma-separated Hecke indices spanning the relation")
@click.option("--n0", type=int, default=20000, show_default=True)
@click.option("--beta", type=int, default=None)
@click.option("--cls-index", type=int, default=0, show_default=True)
@click.option("--branch", type=int, default=0, show_default=True)
@click.option("--form", "form_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="eigenform coefficient file (default: bundled)")
@common_options
def algebraicity_cmd(k, t, N, D, support, n0, beta, cls_index, branch,
                     form_path, prec, fmt, output, cache_dir, no_cache,
                     strict):
    """Hecke-relation combination of the coefficients against the exact
    log-prime ledger it must collapse to."""
    try:
        sup = tuple(int(s) for s in support.split(","))
    except ValueError:
        raise click.UsageError(f"bad support list {support!r}")
    if any(math.gcd(m, N) != 1 for m in sup):
        raise click.UsageError("support indices must be coprime to the level")
    chi = build_chi(D, t, branch=branch)
    cls = _the_class(D, cls_index)
    fp = FourierParams(Params(k, t, N, D), chi, cls, n0=n0, beta=beta)
    rc, cache = make_rc("algebraicity", prec, fmt, output, cache_dir,
                        no_cache, strict,
                        {"k": k, "t": t, "N": N, "D": D,
                         "support": list(sup), "n0": n0, "beta": fp.beta,
                         "cls_index": cls_index, "branch": branch,
                         "form": form_path or "bundled"})
    dim = dim_cusp_forms(2 * k, N)
    if dim == 0:
        matrix = []
    elif dim == 1:
        f = _load_form(form_path, 2 * k, N)
        matrix = [[f.a(m) for m in sup]]
    else:
        raise click.UsageError(
            f"cusp space has dimension {dim}; one eigenform is not enough")
    lam = find_relation(matrix, sup)

    lhs_terms = []
    tail = mp.mpf(0)
    with mp.workprec(prec):
        for m in sup:
            if lam[m] == 0:
                continue
            key = {"op": "fourier-coefficient", "k": k, "t": t, "N": N,
                   "D": D, "beta": fp.beta, "branch": branch,
                   "cls_index": cls_index, "m": m}
            vals = cache.fetch(key, prec, n0,
                               lambda m=m: _fourier_values(fp, m, prec))
            lhs_terms.append(lam[m] * vals["inf"])
            tail += abs(lam[m]) * vals["tail"]
        lhs = mp.fsum(lhs_terms)

        ledger = {}
        for m in sup:
            if lam[m] == 0:
                continue
            scale, acc = a_fin_ledger(fp, m, prec=prec)
            for q, v in acc.items():
                cur = ledger.get(q)
                w = (-lam[m] * scale) * v
                ledger[q] = w if cur is None else cur + w
        rhs = mp.fsum(ledger[q].to_mpc(prec) * mp.log(q)
                      for q in sorted(ledger))
        if all(v.is_exact and v.y == 0 for v in ledger.values()):
            rhs = rhs.real
        diff = abs(lhs - rhs)
        tol = tail + mp.ldexp(max(abs(lhs), abs(rhs), mp.mpf(1)), -(prec - 16))
    passed = diff <= tol
    rows = [["lambda", " ".join(f"{m}:{lam[m]}" for m in sup)],
            ["lhs_green_sum", _dec(lhs, prec)],
            ["rhs_log_ledger", _dec(rhs, prec)],
            ["abs_diff", _dec(diff, prec)],
            ["tolerance", _dec(tol, prec)]]
    for q in sorted(ledger):
        v = ledger[q]
        rows.append([f"c_log{q}",
                     f"{v.x};{v.y}" if v.is_exact else _dec(v.to_mpc(prec), prec)])
    ok = emit(rc, ["item", "value"], rows, [("ledger-collapse", passed)])
    finish(rc, cache, ok)


@main.command("lseries")
@click.option("--D", "D", type=int, required=True)
@click.option("--t", "t", type=int, default=1, show_default=True)
@click.option("--upto", type=int, default=3000, show_default=True,
              help="Dirichlet coefficients to assemble")
@click.option("--probe", type=float, default=0.5, show_default=True,
              help="offset from the center for the FE residual")
@click.option("--split", type=float, default=0.75, show_default=True)
@click.option("--cutoff", type=int, default=None,
              help="fixed coefficient cutoff (default: sized from tol)")
@click.option("--tol", type=float, default=None)
@click.option("--cls-index", type=int, default=0, show_default=True)
@click.option("--branch", type=int, default=0, show_default=True)
@click.option("--form", "form_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="eigenform coefficient file (default: bundled)")
@common_options
def lseries_cmd(D, t, upto, probe, split, cutoff, tol, cls_index, branch,
                form_path, prec, fmt, output, cache_dir, no_cache, strict):
    """Completed values, functional-equation residual, and the central
    derivative of the Rankin-Selberg series."""
    f = ingest_eigenform(form_path) if form_path else bundled_eigenform()
    k = f.weight // 2
    if not 0 < probe < k - t:
        raise click.UsageError(f"probe must lie in (0, {k - t})")
    rc, cache = make_rc("lseries", prec, fmt, output, cache_dir, no_cache,
                        strict,
                        {"D": D, "t": t, "upto": upto, "probe": probe,
                         "split": split, "cutoff": cutoff, "tol": tol,
                         "cls_index": cls_index, "branch": branch,
                         "form": form_path or "bundled",
                         "weight": f.weight, "level": f.level})
    chi = build_chi(D, t, branch=branch)
    cls = _the_class(D, cls_index)

    def compute():
        S = rs_coefficients(f, chi, cls, upto, prec=prec)
        kw = {"split": split, "cutoff": cutoff, "prec": prec,
              "tol": mp.mpf(tol) if tol is not None else None}
        s0 = S.s0
        pb = mp.mpf(probe)
        lp = lambda_completed(S, s0 + pb, **kw)
        lm = lambda_completed(S, s0 - pb, **kw)
        return {"lambda_plus": lp, "lambda_minus": lm,
                "fe_residual": lp - S.sign * lm,
                "lambda_center": lambda_completed(S, s0, **kw),
                "lprime_center": central_derivative(S, **kw)}

    key = {"op": "lseries", "D": D, "t": t, "probe": probe, "split": split,
           "cutoff": cutoff, "tol": tol, "cls_index": cls_index,
           "branch": branch, "form": form_path or "bundled",
           "weight": f.weight, "level": f.level}
    with mp.workprec(prec):
        vals = cache.fetch(key, prec, upto, compute)
        scale = max(abs(vals["lambda_plus"]), abs(vals["lambda_minus"]))
        fe_ok = abs(vals["fe_residual"]) <= mp.mpf("1e-6") * scale
        center_ok = abs(vals["lambda_center"]) <= mp.mpf("1e-6") * scale
    rows = [[name, _dec(vals[name], prec)]
            for name in ("lambda_plus", "lambda_minus", "fe_residual",
                         "lambda_center", "lprime_center")]
    ok = emit(rc, ["quantity", "value"], rows,
              [("fe-residual", fe_ok), ("central-vanishing", center_ok)])
    finish(rc, cache, ok)


if __name__ == "__main__":
    main()
