import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gdpkit.expr import AffineExpr, Rel
from gdpkit.logic import Lit
from gdpkit.model import GdpModel

MODELS_DIR = Path(__file__).parent.parent / "models"
GOLDEN_DIR = Path(__file__).parent / "golden"


def build_two_rectangle() -> GdpModel:
    """Left rectangle [0,2]x[0,1] or right rectangle [3,5]x[1,2] in a
    [0,10]^2 box, maximizing x1 + x2.  Optimum 7 at (5, 2)."""
    m = GdpModel("two_rectangle")
    x1 = m.add_variable("x1", 0, 10)
    x2 = m.add_variable("x2", 0, 10)
    left = [
        m.constraint("a1", x1 + 0.0, Rel.LE, 2),
        m.constraint("a2", x1 + 0.0, Rel.GE, 0),
        m.constraint("a3", x2 + 0.0, Rel.LE, 1),
        m.constraint("a4", x2 + 0.0, Rel.GE, 0),
    ]
    right = [
        m.constraint("b1", x1 + 0.0, Rel.GE, 3),
        m.constraint("b2", x1 + 0.0, Rel.LE, 5),
        m.constraint("b3", x2 + 0.0, Rel.GE, 1),
        m.constraint("b4", x2 + 0.0, Rel.LE, 2),
    ]
    m.add_disjunction("R", [left, right], indicator_names=["Y1", "Y2"])
    m.choose(1, ["Y1", "Y2"], mode="exactly")
    m.set_objective("max", x1 + x2)
    return m


def build_superstructure() -> GdpModel:
    """Reactor selection with a nested separator choice; yields 0.9/0.75 and
    0.8/0.85, costs 1.0/0.5 and 0.3/0.4.  Optimum 8.0 picking reactor 1."""
    m = GdpModel("superstructure")
    F = {i: m.add_variable(f"F{i}", 0, 10) for i in range(1, 8)}
    CS = m.add_variable("CS", 0, 2)
    CR = m.add_variable("CR", 0, 2)
    m.add_constraint("mb1", F[1] - F[2] - F[3], Rel.EQ, 0)
    m.add_constraint("mb2", F[7] - F[5] - F[6], Rel.EQ, 0)
    r1 = [
        m.constraint("r1_conv", F[6] - 0.9 * F[2], Rel.EQ, 0),
        m.constraint("r1_f3", F[3] + 0.0, Rel.EQ, 0),
        m.constraint("r1_f4", F[4] + 0.0, Rel.EQ, 0),
        m.constraint("r1_f5", F[5] + 0.0, Rel.EQ, 0),
        m.constraint("r1_cr", CR + 0.0, Rel.EQ, 1.0),
        m.constraint("r1_cs", CS + 0.0, Rel.EQ, 0),
    ]
    r2 = [
        m.constraint("r2_f2", F[2] + 0.0, Rel.EQ, 0),
        m.constraint("r2_f6", F[6] + 0.0, Rel.EQ, 0),
        m.constraint("r2_conv", F[4] - 0.75 * F[3], Rel.EQ, 0),
        m.constraint("r2_cr", CR + 0.0, Rel.EQ, 0.5),
    ]
    m.add_disjunction("R", [r1, r2], indicator_names=["Y_R1", "Y_R2"])
    s1 = [
        m.constraint("s1_conv", F[5] - 0.8 * F[4], Rel.EQ, 0),
        m.constraint("s1_cs", CS + 0.0, Rel.EQ, 0.3),
    ]
    s2 = [
        m.constraint("s2_conv", F[5] - 0.85 * F[4], Rel.EQ, 0),
        m.constraint("s2_cs", CS + 0.0, Rel.EQ, 0.4),
    ]
    m.add_disjunction("S", [s1, s2], parent=("R", 2), indicator_names=["Y_S1", "Y_S2"])
    m.choose(1, ["Y_R1", "Y_R2"], mode="exactly")
    m.choose("Y_R2", ["Y_S1", "Y_S2"], mode="exactly")
    m.set_objective("max", F[7] - CR - CS)
    return m


def build_random_gdp(seed: int) -> GdpModel:
    """Random linear GDP: <= 3 disjunctions x <= 3 disjuncts, n <= 4 box
    variables.  Each disjunct gets a feasibility witness inside the box so
    most instances are feasible, and occasional propositions / non-default
    selections exercise the logic paths."""
    rng = random.Random(seed)
    n = rng.randint(1, 4)
    m = GdpModel(f"rand{seed}")
    refs = []
    for i in range(n):
        hi = rng.choice([4.0, 5.0, 8.0, 10.0])
        lo = rng.choice([0.0, 0.0, -3.0])
        refs.append(m.add_variable(f"x{i + 1}", lo, hi))
    obj = AffineExpr({r.id: rng.choice([-2, -1, 1, 1, 2, 3]) for r in refs})
    m.set_objective("max", obj)
    if rng.random() < 0.5:
        coeffs = {r.id: 1.0 for r in refs}
        cap = sum(max(abs(r.lower), abs(r.upper)) for r in refs) * rng.uniform(0.5, 1.0)
        m.add_constraint("cap", AffineExpr(coeffs), Rel.LE, cap)

    label = 0
    for k in range(rng.randint(1, 3)):
        disjuncts = []
        for _i in range(rng.randint(2, 3)):
            witness = {r.id: rng.uniform(r.lower, r.upper) for r in refs}
            cons = []
            for _c in range(rng.randint(1, 2)):
                picks = rng.sample(refs, rng.randint(1, n))
                coeffs = {r.id: rng.choice([-2, -1, 1, 2]) for r in picks}
                body = AffineExpr(coeffs)
                base = sum(coeffs[r.id] * witness[r.id] for r in picks)
                roll = rng.random()
                label += 1
                if roll < 0.15:
                    cons.append(m.constraint(f"c{label}", body, Rel.EQ, base))
                elif roll < 0.6:
                    cons.append(m.constraint(f"c{label}", body, Rel.LE, base + rng.uniform(0, 3)))
                else:
                    cons.append(m.constraint(f"c{label}", body, Rel.GE, base - rng.uniform(0, 3)))
            disjuncts.append(cons)
        m.add_disjunction(f"D{k + 1}", disjuncts)

    disjunctions = m.disjunctions
    if len(disjunctions) >= 2 and rng.random() < 0.4:
        a = rng.choice(disjunctions[0].indicator_names())
        b = rng.choice(disjunctions[1].indicator_names())
        m.add_proposition(Lit(a).implies(Lit(b)), label="link")
    if rng.random() < 0.25:
        dis = rng.choice(disjunctions)
        m.choose(1, dis.indicator_names(), mode=rng.choice(["atleast", "atmost"]))
    return m


CORPUS_SEEDS = list(range(100))


@pytest.fixture(scope="session")
def two_rectangle():
    return build_two_rectangle()


@pytest.fixture(scope="session")
def superstructure():
    return build_superstructure()


@pytest.fixture(scope="session")
def corpus():
    return [build_random_gdp(seed) for seed in CORPUS_SEEDS]
