"""End-to-end demo on a synthetic convoy log: ingest, estimate, correlate.

    python scripts/demo_pipeline.py --out demo
"""
import argparse
import json
from pathlib import Path

from shadowlink import cli, presets
from shadowlink.fadesim import ShadowSpec
from shadowlink.synthetic import ConvoyDrive, synthetic_log


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--d-c", type=float, default=80.0, help="true de-correlation distance of the synthetic fading [m]")
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model, geom = presets.published_model("A:XC70-S60M:OLOS")
    cfg = presets.link_config("XC70-S60M")
    drive = ConvoyDrive(duration=3600, d_min=30, d_max=900, period=400)
    text = synthetic_log(model, ShadowSpec(model.sigma, "single_exp", d_c=args.d_c), cfg, drive, geom, "OLOS",
                         seed=args.seed)
    (out / "log.csv").write_text(text)
    (out / "link.json").write_text(json.dumps({"tx_power_dbm": cfg.tx_power,
                                               "cable_loss_db": {"XC70": cfg.tx_cable_loss, "S60M": cfg.rx_cable_loss}}))

    steps = [
        ["ingest", str(out / "log.csv"), "--config", str(out / "link.json"), "--out", str(out / "ingest")],
        ["estimate", str(out / "ingest" / "samples_XC70_S60M.csv"), "--condition", "olos", "--out", str(out / "fit")],
        ["correlate", str(out / "fit" / "residuals.csv"), "--out", str(out / "corr")],
    ]
    for argv_ in steps:
        print("$ shadowlink " + " ".join(argv_))
        code = cli.main(argv_)
        if code:
            raise SystemExit(code)
    print(f"truth: PL(d0) {model.pl_d0}, alpha {model.alpha}, sigma {model.sigma}, d_c {args.d_c} m")


if __name__ == "__main__":
    main()
