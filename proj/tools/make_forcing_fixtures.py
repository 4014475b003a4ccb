"""Writes the synthetic forcing fixtures under data/.

The series are smooth stand-ins with realistic magnitudes (W m^-2), not
observational products.
"""
import math
import pathlib

root = pathlib.Path(__file__).resolve().parent.parent / "data"
hist = range(1955, 2021)
future = range(2021, 2101)

volcanic = {1963: -0.9, 1964: -0.7, 1965: -0.3, 1982: -1.0, 1983: -0.7, 1984: -0.2,
            1991: -2.2, 1992: -1.6, 1993: -0.5, 1994: -0.1}


def anthropogenic(y):
    x = (y - 1955) / 65.0
    return 0.55 + 2.15 * x ** 1.55 + 0.02 * math.sin(0.7 * (y - 1955))


def natural(y):
    return 0.08 * math.sin(2 * math.pi * (y - 1958) / 11.0) + volcanic.get(y, 0.0)


def write(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(header + "\n")
        for y, v in rows:
            f.write(f"{y},{v:.6f}\n")


write(root / "forcing_natural.csv", "year,value", [(y, natural(y)) for y in hist])
write(root / "forcing_anthropogenic.csv", "year,value", [(y, anthropogenic(y)) for y in hist])
write(root / "forcing_total.csv", "year,value", [(y, natural(y) + anthropogenic(y)) for y in hist])

start = anthropogenic(2020)
# (level in 2100, peak bump) per pathway; the bump shapes the low pathway.
pathways = {"rcp26": (2.6, 0.55), "rcp45": (4.5, 0.0), "rcp60": (6.0, 0.0), "rcp85": (8.5, 0.0)}
paths = {}
for name, (end, bump) in pathways.items():
    vals = []
    for y in future:
        x = (y - 2020) / 80.0
        ramp = start + (end - start) * (3 * x * x - 2 * x ** 3 if name != "rcp85" else x ** 1.3)
        vals.append(ramp + bump * math.sin(math.pi * x) ** 2)
    paths[name] = vals
names = list(pathways)
for a, b in zip(names, names[1:]):
    assert all(u <= v for u, v in zip(paths[a], paths[b])), (a, b)
for name, vals in paths.items():
    write(root / "scenarios" / f"{name}.csv", "year,forcing", zip(future, vals))
