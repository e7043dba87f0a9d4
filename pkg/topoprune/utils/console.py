"""
Console status messages.

Human readable progress goes to stderr so stdout stays free for JSON output.
"""
import click

_quiet = False


def set_quiet(quiet: bool) -> None:
    """Silence (or re-enable) every status message."""
    global _quiet
    _quiet = quiet


def _emit(prefix: str, message: str) -> None:
    if not _quiet:
        click.echo(f"{prefix} {message}", err=True)


def info(message: str) -> None:
    _emit("🔎", message)


def success(message: str) -> None:
    _emit("✅", message)


def warn(message: str) -> None:
    _emit("⚠️ ", message)


def error(message: str) -> None:
    # Errors are shown even in quiet mode.
    click.echo(f"❌ {message}", err=True)


def is_quiet() -> bool:
    return _quiet
