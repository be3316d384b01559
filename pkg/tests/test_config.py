"""Tests for configuration loading."""

import pytest

from src.config import (
    AppSettings,
    NetworkConfig,
    SweepConfig,
    TrainConfig,
    config_fingerprint,
    get_project_root,
    load_config,
    resolve_output,
)
from src.errors import ConfigurationError
from src.models import Activation, CompositionMode


def test_sweep_config_defaults():
    """Test SweepConfig default values."""
    config = SweepConfig()
    assert config.pool.size == 611
    assert config.grid.budget_fractions == [0.1, 0.3, 0.6]
    assert config.grid.mode is CompositionMode.BUDGET_SHARE
    assert config.train.peak_lr == 5e-4
    assert config.train.early_stop_patience == 250
    assert config.network.activation is Activation.GELU
    assert config.network.dtype == "float32"


def test_get_project_root():
    """Test project root detection."""
    root = get_project_root()
    assert (root / "src").exists()


def test_load_shipped_config():
    """The shipped study config loads."""
    config = load_config(str(get_project_root() / "config" / "study.yaml"))
    assert config.grid.test_size < config.pool.size


def test_load_missing_explicit_file(tmp_path):
    """A named file that does not exist is an error."""
    with pytest.raises(ConfigurationError):
        load_config(str(tmp_path / "missing.yaml"))


def test_load_from_file(tmp_path):
    """Sections in the file override defaults."""
    path = tmp_path / "study.yaml"
    path.write_text("pool:\n  size: 40\ngrid:\n  test_size: 8\n  seeds: [3]\n")
    config = load_config(str(path))
    assert config.pool.size == 40
    assert config.grid.seeds == [3]
    assert config.train.epochs == 500


@pytest.mark.parametrize("text", [
    "grid:\n  compositions: [0.5, 0.25]\n",
    "grid:\n  budget_fractions: [0.3, 0.3]\n",
    "grid:\n  seeds: []\n",
    "pool:\n  size: 10\ngrid:\n  test_size: 10\n",
    "train:\n  epochs: 5\n  warmup_epochs: 5\n",
    "network:\n  field_widths: [3, 8, 2]\n",
    "network:\n  dtype: float16\n",
    "- just\n- a list\n",
    "pool: [unclosed\n",
])
def test_invalid_files(tmp_path, text):
    """Invalid settings raise ConfigurationError."""
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    with pytest.raises(ConfigurationError):
        load_config(str(path))


def test_fidelity_label_widens_inputs():
    """With the label the nets take one more input."""
    with pytest.raises(ValueError):
        NetworkConfig(fidelity_label=True)
    NetworkConfig(field_widths=[4, 8, 1], scalar_widths=[3, 4, 1], fidelity_label=True)


def test_zero_epochs_allowed():
    """Zero epochs skips the warmup check."""
    assert TrainConfig(epochs=0).epochs == 0


def test_resolve_output_precedence(tmp_path, monkeypatch):
    """Flags beat the environment, which beats the file."""
    monkeypatch.delenv("MULTIFID_OUT_DIR", raising=False)
    monkeypatch.delenv("MULTIFID_WORKERS", raising=False)
    config = SweepConfig(output={"out_dir": str(tmp_path / "file"), "workers": 3})
    settings = AppSettings(out_dir=str(tmp_path / "env"), workers=2)
    assert resolve_output(config, None, None, settings) == (tmp_path / "env", 2)
    assert resolve_output(config, str(tmp_path / "flag"), 5, settings) == (tmp_path / "flag", 5)
    assert resolve_output(config, None, None, AppSettings()) == (tmp_path / "file", 3)


def test_env_settings(monkeypatch):
    """Environment variables use the MULTIFID_ prefix."""
    monkeypatch.setenv("MULTIFID_WORKERS", "7")
    monkeypatch.setenv("MULTIFID_OUT_DIR", "/tmp/elsewhere")
    settings = AppSettings()
    assert settings.workers == 7
    assert settings.out_dir == "/tmp/elsewhere"


def test_fingerprint_sections():
    """Fingerprints change only with the sections they cover."""
    base = SweepConfig()
    other = base.model_copy(update={"train": base.train.model_copy(update={"epochs": 9})})
    assert config_fingerprint(base, "pool", "solver") == config_fingerprint(other, "pool", "solver")
    assert config_fingerprint(base) != config_fingerprint(other)
    assert config_fingerprint(base) == config_fingerprint(SweepConfig())
