"""Batch front door: run pipeline stages on local files, compute
metrics, launch the service.

Exit codes: 0 success, 1 input/validation error, 2 external-backend
error, 3 internal invariant violation. With ``--json``, errors are also
emitted as machine-readable JSON on stderr.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from .asr.gateway import AsrBackendConfig, transcribe as asr_transcribe
from .asr.mock import load_fixture
from .errors import (
    AudioUnreadable,
    AuthFailure,
    BackendUnavailable,
    ContextLengthExceeded,
    EmptyInput,
    EmptyReference,
    EmptyTranscript,
    I2eError,
    InvalidFixture,
    InvariantViolation,
    KeyMismatch,
    LengthMismatch,
    MalformedBackendResponse,
    MissingJudgment,
    ParseError,
    SessionEvalFailed,
    SessionMismatch,
    ZeroAutomatedTime,
)
from .evaluate.agent import EvalParams, evaluate_session
from .metrics.agreement import agreement
from .metrics.categories import categorize_errors, misrecognized_terms
from .metrics.cer import corpus_cer
from .metrics.efficiency import WorkflowTimings, efficiency_gain
from .model import AudioSession, ExpertAnnotation
from .model.serialize import (
    canonical_serialize,
    dumps_canonical,
    parse_annotation,
    parse_judgments,
    parse_rubric,
    parse_transcript,
)
from .model.validate import validate_transcript
from .refine.agent import RefineParams, refine as run_refine
from .refine.lexicon import HomophoneLexicon
from .rubric.engine import ScoringInput, score_scale
from .service.jobs import ServiceConfig, make_llm_backend

_INPUT_ERRORS = (ParseError, InvariantViolation, InvalidFixture,
                 MissingJudgment, KeyMismatch, LengthMismatch, EmptyInput,
                 EmptyReference, SessionMismatch, ZeroAutomatedTime,
                 EmptyTranscript, AudioUnreadable, OSError,
                 json.JSONDecodeError, KeyError, ValueError)
_BACKEND_ERRORS = (BackendUnavailable, AuthFailure, MalformedBackendResponse,
                   ContextLengthExceeded, SessionEvalFailed)


@click.group()
@click.option("--json", "json_errors", is_flag=True,
              help="emit machine-readable error JSON on stderr")
@click.option("--config", "config_path", type=str, default=None,
              help="TOML config with [asr]/[llm] backend settings")
@click.pass_context
def cli(ctx, json_errors: bool, config_path: str | None):
    """Assessment pipeline tools for classroom session transcripts."""
    ctx.ensure_object(dict)
    ctx.obj["json_errors"] = json_errors
    ctx.obj["config"] = _load_config(config_path) if config_path else {}


def _load_config(path: str) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _fail(ctx, exc: BaseException, code: int):
    if ctx.obj.get("json_errors"):
        sys.stderr.write(json.dumps({
            "error": type(exc).__name__,
            "message": str(exc),
            "exit_code": code,
        }, ensure_ascii=False) + "\n")
    else:
        sys.stderr.write(f"error: {exc}\n")
    sys.exit(code)


def _run(ctx, fn):
    try:
        fn()
    except _BACKEND_ERRORS as exc:
        _fail(ctx, exc, 2)
    except _INPUT_ERRORS as exc:
        _fail(ctx, exc, 1)
    except I2eError as exc:
        _fail(ctx, exc, 3)


def _read(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _write(path: str, data: bytes) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)


def _backend_setting(ctx, section: str, key: str, fallback):
    return ctx.obj.get("config", {}).get(section, {}).get(key, fallback)


@cli.command()
@click.option("--audio", "audio_path", required=True,
              help="audio object (mock backends read a fixture file)")
@click.option("--backend", "endpoint", default=None,
              help="ASR endpoint URL (default: [asr].endpoint or mock:)")
@click.option("--model-tag", default=None)
@click.option("--session-id", default=None)
@click.option("--duration-ms", type=int, default=None)
@click.option("--out", "out_path", required=True)
@click.pass_context
def transcribe(ctx, audio_path, endpoint, model_tag, session_id,
               duration_ms, out_path):
    """Produce a raw transcript from an audio session."""
    def body():
        url = endpoint or _backend_setting(ctx, "asr", "endpoint", "mock:")
        tag = model_tag or _backend_setting(ctx, "asr", "model_tag", "")
        sid, duration = session_id, duration_ms
        if url.startswith("mock:") and (sid is None or duration is None):
            fixture = load_fixture(url[len("mock:"):] or audio_path)
            sid = sid or str(fixture.get("session_id", ""))
            if duration is None:
                duration = max(int(u["end_ms"]) for u in fixture["utterances"])
        if sid is None or duration is None:
            raise click.UsageError(
                "--session-id and --duration-ms are required for HTTP backends")
        session = AudioSession(session_id=sid, duration_ms=duration,
                               audio_uri=audio_path)
        cfg = AsrBackendConfig(endpoint_url=url, model_tag=tag)
        result = asr_transcribe(session, cfg)
        _write(out_path, canonical_serialize(result.transcript))
        click.echo(f"wrote {out_path} "
                   f"({len(result.transcript.segments)} segments)")
    _run(ctx, body)


@cli.command()
@click.option("--in", "in_path", required=True)
@click.option("--lexicon", "lexicon_path", default=None)
@click.option("--llm", "endpoint", default=None,
              help="LLM endpoint (default: [llm].endpoint or mock:)")
@click.option("--window-size", type=int, default=RefineParams.window_size)
@click.option("--context-size", type=int, default=RefineParams.context_size)
@click.option("--token-budget", type=int, default=RefineParams.token_budget)
@click.option("--out", "out_path", required=True)
@click.option("--audit", "audit_path", default=None)
@click.pass_context
def refine(ctx, in_path, lexicon_path, endpoint, window_size, context_size,
           token_budget, out_path, audit_path):
    """Correct a raw transcript with the refinement agent."""
    def body():
        raw = parse_transcript(_read(in_path))
        violations = validate_transcript(raw)
        if violations:
            raise InvariantViolation(
                "input transcript invalid: "
                + "; ".join(str(v) for v in violations))
        lexicon = (HomophoneLexicon.from_file(lexicon_path)
                   if lexicon_path else HomophoneLexicon())
        url = endpoint or _backend_setting(ctx, "llm", "endpoint", "mock:")
        backend = make_llm_backend(url, _backend_setting(ctx, "llm", "model", ""))
        params = RefineParams(window_size=window_size,
                              context_size=context_size,
                              token_budget=token_budget)
        refined, audit = run_refine(raw, lexicon, backend, params)
        _write(out_path, canonical_serialize(refined))
        if audit_path:
            _write(audit_path, dumps_canonical(audit.to_dict()))
        click.echo(f"wrote {out_path} "
                   f"({len(audit.changed_segment_ids)} segments changed, "
                   f"{audit.rejected_windows} windows rejected)")
    _run(ctx, body)


@cli.command()
@click.option("--in", "in_path", required=True)
@click.option("--rubric", "rubric_path", required=True)
@click.option("--llm", "endpoint", default=None)
@click.option("--out", "out_path", required=True)
@click.pass_context
def evaluate(ctx, in_path, rubric_path, endpoint, out_path):
    """Judge every language-accessible indicator against a transcript."""
    def body():
        transcript = parse_transcript(_read(in_path))
        rubric = parse_rubric(_read(rubric_path))
        url = endpoint or _backend_setting(ctx, "llm", "endpoint", "mock:")
        backend = make_llm_backend(url, _backend_setting(ctx, "llm", "model", ""))
        judgments = evaluate_session(rubric, transcript, backend, EvalParams())
        _write(out_path, canonical_serialize(judgments))
        flagged = sum(1 for j in judgments if j.validation.is_flagged)
        click.echo(f"wrote {out_path} ({len(judgments)} judgments, "
                   f"{flagged} flagged)")
    _run(ctx, body)


@cli.command()
@click.option("--judgments", "judgments_path", required=True)
@click.option("--rubric", "rubric_path", required=True)
@click.option("--out", "out_path", required=True)
@click.pass_context
def score(ctx, judgments_path, rubric_path, out_path):
    """Derive item scores and scale summaries from judgments."""
    def body():
        judgments = parse_judgments(_read(judgments_path))
        rubric = parse_rubric(_read(rubric_path))
        observed = {j.indicator_id: j.observed for j in judgments}
        summary = score_scale(ScoringInput(rubric=rubric, judgments=observed))
        _write(out_path, canonical_serialize(summary))
        click.echo(f"wrote {out_path} (overall mean {summary.overall_mean:.3f})")
    _run(ctx, body)


@cli.command()
@click.option("--ref", "ref_path", required=True, help="gold transcript JSON")
@click.option("--hyp", "hyp_path", required=True, help="hypothesis transcript JSON")
@click.option("--refined", "refined_path", default=None,
              help="refined hypothesis for a before/after comparison")
@click.option("--lexicon", "lexicon_path", default=None)
@click.option("--categories", is_flag=True,
              help="also categorize errors (uses --lexicon when given)")
@click.option("--terms", "terms_path", default=None,
              help="write the misrecognized-term frequency table "
                   "(.json or .csv by extension)")
@click.pass_context
def cer(ctx, ref_path, hyp_path, refined_path, lexicon_path, categories,
        terms_path):
    """Character error rate of a hypothesis transcript against gold."""
    def body():
        gold = parse_transcript(_read(ref_path))
        hyp = parse_transcript(_read(hyp_path))
        raw_breakdown = corpus_cer(gold, hyp)
        out: dict = {"raw": raw_breakdown.to_dict()}
        click.echo(f"raw:     CER {raw_breakdown.cer * 100:.2f}%  "
                   f"(S={raw_breakdown.substitutions} "
                   f"D={raw_breakdown.deletions} "
                   f"I={raw_breakdown.insertions} N={raw_breakdown.ref_chars})")
        if refined_path:
            refined_breakdown = corpus_cer(gold, parse_transcript(_read(refined_path)))
            delta = refined_breakdown.cer - raw_breakdown.cer
            relative = (delta / raw_breakdown.cer * 100) if raw_breakdown.cer else 0.0
            out["refined"] = refined_breakdown.to_dict()
            out["delta"] = delta
            out["relative_pct"] = relative
            click.echo(f"refined: CER {refined_breakdown.cer * 100:.2f}%")
            click.echo(f"delta:   {delta * 100:+.2f} pts ({relative:+.1f}%)")
        if categories:
            lexicon = (HomophoneLexicon.from_file(lexicon_path)
                       if lexicon_path else HomophoneLexicon())
            report = categorize_errors(gold, hyp, lexicon)
            out["categories"] = report.to_dict()
            for cat, count in report.counts.items():
                share = report.shares[cat]
                click.echo(f"  {cat}: {count} ({share * 100:.1f}%)")
        if terms_path:
            rows = misrecognized_terms(gold, hyp)
            if terms_path.endswith(".csv"):
                lines = ["gold,hyp,count"] + [
                    f'"{r["gold"]}","{r["hyp"]}",{r["count"]}' for r in rows]
                _write(terms_path, ("\n".join(lines) + "\n").encode("utf-8"))
            else:
                _write(terms_path, json.dumps(
                    rows, ensure_ascii=False).encode("utf-8"))
            click.echo(f"wrote {terms_path} ({len(rows)} terms)")
        if ctx.obj.get("json_errors"):
            click.echo(json.dumps(out, ensure_ascii=False))
    _run(ctx, body)


@cli.command()
@click.option("--judgments", "judgments_path", required=True)
@click.option("--gold", "gold_path", required=True, help="expert annotation JSON")
@click.option("--rubric", "rubric_path", required=True)
@click.option("--group-by", default="dimension",
              type=click.Choice(["dimension"]))
@click.pass_context
def agree(ctx, judgments_path, gold_path, rubric_path, group_by):
    """Agreement (kappa, %agr) between judgments and expert annotations."""
    def body():
        judgments = parse_judgments(_read(judgments_path))
        model = {j.indicator_id: j.observed for j in judgments}
        annotation = parse_annotation(_read(gold_path))
        rubric = parse_rubric(_read(rubric_path))
        report = agreement(model, annotation, rubric)
        for dim in sorted(report.per_dimension):
            stats = report.per_dimension[dim]
            kappa = "NotDefined" if stats.kappa is None else f"{stats.kappa:.3f}"
            click.echo(f"{dim}: kappa={kappa} "
                       f"pct={stats.pct_agreement:.3f}")
        overall_kappa = ("NotDefined" if report.overall_kappa is None
                         else f"{report.overall_kappa:.3f}")
        click.echo(f"overall: kappa={overall_kappa} pct={report.overall_pct:.3f}")
        if ctx.obj.get("json_errors"):
            click.echo(json.dumps(report.to_dict(), ensure_ascii=False))
    _run(ctx, body)


@cli.command()
@click.option("--timings", "timings_path", required=True)
@click.option("--classrooms", type=int, default=100)
@click.pass_context
def efficiency(ctx, timings_path, classrooms):
    """Workflow speedup of the automated pipeline over manual assessment."""
    def body():
        timings = WorkflowTimings.from_dict(json.loads(_read(timings_path)))
        report = efficiency_gain(timings)
        hours_traditional, hours_automated = report.hours_at(classrooms)
        click.echo(f"traditional total: {report.total_traditional_min:g} min")
        click.echo(f"automated total:   {report.total_automated_min:g} min")
        click.echo(f"speedup: {report.speedup:.3f} → {report.speedup_label}")
        click.echo(f"at {classrooms} classrooms: "
                   f"{hours_traditional:.1f} h vs {hours_automated:.1f} h")
        if ctx.obj.get("json_errors"):
            click.echo(json.dumps({
                **report.to_dict(),
                "classrooms": classrooms,
                "hours_traditional": hours_traditional,
                "hours_automated": hours_automated,
            }, ensure_ascii=False))
    _run(ctx, body)


@cli.command()
@click.option("--port", type=int, default=8000)
@click.option("--host", default="127.0.0.1")
@click.option("--data-root", default=None)
@click.pass_context
def serve(ctx, port, host, data_root):
    """Run the HTTP assessment service."""
    def body():
        import uvicorn

        from .service.app import create_app

        overrides = {}
        if data_root:
            overrides["data_root"] = Path(data_root)
        app = create_app(ServiceConfig.from_env(**overrides))
        uvicorn.run(app, host=host, port=port, log_level="info")
    _run(ctx, body)


def main():
    try:
        cli(standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(1)


if __name__ == "__main__":
    main()
