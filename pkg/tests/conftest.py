import pytest

from comfix.maps import Expr, MapTable, parse_map


def table(dim=1, **sources):
    """MapTable from keyword sources; values are expressions or MapDefs."""
    defs = {}
    for name, src in sources.items():
        defs[name] = Expr(parse_map(src, dim), src) if isinstance(src, str) else src
    return MapTable(defs, dim)


@pytest.fixture
def make_table():
    return table


def pair_toml(contractor, dominator, lower, upper, x0, *, extra_maps="", space=None, numerics=""):
    """Scenario text for a 1-d pair problem with maps named g (contractor) and f (dominator)."""
    space_lines = ""
    if space is not None:
        space_lines = f"space_lower = [{space[0]}]\nspace_upper = [{space[1]}]\n"
    return (
        'name = "t"\ndimension = 1\n\n'
        f"[domain]\nlower = [{lower!r}]\nupper = [{upper!r}]\n{space_lines}\n"
        f'[maps]\ng = "{contractor}"\nf = "{dominator}"\n{extra_maps}\n'
        f'[problem]\ntype = "pair"\ncontractor = "g"\ndominator = "f"\nx0 = [{x0!r}]\n'
        + (f"\n[numerics]\n{numerics}\n" if numerics else "")
    )
