import configparser
import pathlib
from typing import Any


def load_settings(config_path: str | None = None) -> dict[str, Any]:
    """
    Load numerical defaults from the INI file.

    Creates a default configuration file if it doesn't exist and returns
    parsed settings with appropriate data types.

    Args:
        config_path: Path to the configuration file (None for auto-detection)

    Returns:
        Dictionary with the solver, output and ridge defaults
    """
    config = configparser.ConfigParser()

    final_config_path: str

    if config_path is None:
        possible_paths = [
            "settings.ini",
            str(pathlib.Path(__file__).parent.parent.parent / "settings.ini"),
        ]

        for path in possible_paths:
            if pathlib.Path(path).exists():
                final_config_path = path
                break
        else:
            final_config_path = "settings.ini"
    else:
        final_config_path = config_path

    config_path_obj = pathlib.Path(final_config_path)

    if not config_path_obj.exists():
        config["SOLVER"] = {"g_min": "1e-8", "feasibility_tol": "1e-3", "quadrature_extra": "1"}
        config["OUTPUT"] = {"directory": "output", "snapshot_every": "10"}
        config["RIDGE"] = {"width_samples": "64", "w_min": "1e-3"}

        config_path_obj.parent.mkdir(parents=True, exist_ok=True)

        with config_path_obj.open("w") as configfile:
            config.write(configfile)

    config.read(final_config_path)

    settings = {
        "solver": {
            "g_min": config.getfloat("SOLVER", "g_min", fallback=1e-8),
            "feasibility_tol": config.getfloat("SOLVER", "feasibility_tol", fallback=1e-3),
            "quadrature_extra": config.getint("SOLVER", "quadrature_extra", fallback=1),
        },
        "output": {
            "directory": config.get("OUTPUT", "directory", fallback="output"),
            "snapshot_every": config.getint("OUTPUT", "snapshot_every", fallback=10),
        },
        "ridge": {
            "width_samples": config.getint("RIDGE", "width_samples", fallback=64),
            "w_min": config.getfloat("RIDGE", "w_min", fallback=1e-3),
        },
    }

    return settings
