# %% [markdown]
# # Bundled scenarios and exports
#
# Each scenario is a JSON config. Running one yields a scene (canonical
# JSON, plus OBJ and SVG views) and a text report. The same runs are
# available from the command line, e.g.
# `cnnpreimage trace --scenario fig4-triangle --format obj --out-dir out`.

# %%
from pathlib import Path

from cnnpreimage import export_json, export_obj, export_svg
from cnnpreimage.scenarios import bundled, bundled_names, run_scenario

out = Path("scenario_output")
out.mkdir(exist_ok=True)
for name in bundled_names():
    cfg = bundled(name)
    g, report = run_scenario(cfg)
    print(report)
    export_json(g, out / f"{name}.json")
    export_svg(g, out / f"{name}.svg", cfg.projection)
    if cfg.dimension in (2, 3):
        export_obj(g, out / f"{name}.obj")
print(sorted(p.name for p in out.iterdir()))
