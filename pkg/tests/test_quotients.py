import json
import random
import time

import numpy as np
import pytest

from hlslab.errors import InputError, ResourceError
from hlslab.perms import perm_key
from hlslab.quotients import (ApproximatedGroup, FiniteQuotient,
                              enumerate_kernel_reps, kernel_refines)
from hlslab.words import Word, ball


def cyclic_perm(m, shift):
    return np.roll(np.arange(m, dtype=np.int32), -shift)


# -- kernel enumeration -------------------------------------------------------

def test_kernel_reps_level_1():
    reps = enumerate_kernel_reps(1)
    assert len(reps) == 1
    assert reps[0].order == 1


def test_kernel_reps_level_2():
    # trivial-image kernel plus the three index-2 kernels
    reps = enumerate_kernel_reps(2)
    assert len(reps) == 4
    assert sorted(r.order for r in reps) == [1, 2, 2, 2]


def test_kernel_reps_level_3():
    # all groups of order <= 3 are cyclic: 1 trivial + 3 onto Z/2 + 4 onto Z/3
    reps = enumerate_kernel_reps(3)
    assert sorted(r.order for r in reps) == [1, 2, 2, 2, 3, 3, 3, 3]


def test_kernel_reps_cap():
    with pytest.raises(ResourceError):
        enumerate_kernel_reps(7)


def test_kernels_refine_to_next_level():
    # every kernel at level n persists (as an equal kernel) at level n+1
    reps = {n: enumerate_kernel_reps(n) for n in (1, 2, 3, 4)}
    for n in (1, 2, 3):
        for p in reps[n]:
            assert any(kernel_refines(q, p) and kernel_refines(p, q)
                       for q in reps[n + 1] if q.order == p.order)


# -- kernel_refines -----------------------------------------------------------

def test_kernel_refines_trivial_map():
    trivial = FiniteQuotient([cyclic_perm(1, 0), cyclic_perm(1, 0)], rank=2)
    z2 = FiniteQuotient([cyclic_perm(2, 1), cyclic_perm(2, 0)], rank=2)
    assert not kernel_refines(trivial, z2)
    assert kernel_refines(trivial, trivial)
    assert kernel_refines(z2, trivial)
    assert kernel_refines(z2, z2)


def test_kernel_refines_z4_to_z2():
    p = FiniteQuotient([cyclic_perm(4, 1), cyclic_perm(4, 0)], rank=2)
    q = FiniteQuotient([cyclic_perm(2, 1), cyclic_perm(2, 0)], rank=2)
    assert kernel_refines(p, q)
    assert not kernel_refines(q, p)


# -- quotient towers ----------------------------------------------------------

def test_fd_orders(fd):
    t0 = time.monotonic()
    orders = [fd.quotient(n).order for n in (1, 2, 3)]
    assert orders == [1, 4, 36]
    assert time.monotonic() - t0 < 15.0


def test_cyclic_orders(cyclic):
    assert [cyclic.quotient(n).order for n in range(1, 6)] == [2, 4, 8, 16, 32]


def test_congruence_orders(congruence):
    assert [congruence.quotient(n).order for n in range(1, 5)] == \
        [1, 4, 32, 256]


def test_order_divisibility(fd, congruence, cyclic):
    for base, top in ((fd, 4), (congruence, 5), (cyclic, 10)):
        orders = [base.quotient(n).order for n in range(1, top + 1)]
        for a, b in zip(orders, orders[1:]):
            assert b % a == 0


def test_schreier_sims_matches_bfs(fd, congruence, cyclic):
    for base, top in ((fd, 4), (congruence, 4), (cyclic, 8)):
        for n in range(1, top + 1):
            assert base.quotient(n).verify_schreier_sims()


def test_unknown_family():
    with pytest.raises(InputError):
        ApproximatedGroup("nope")


def test_fiber_cap():
    small = ApproximatedGroup("cyclic", fiber_cap=16)
    with pytest.raises(ResourceError):
        small.quotient(6)


# -- evaluation ---------------------------------------------------------------

def test_evaluate_identity(fd, cyclic):
    assert fd.quotient(3).evaluate(Word.identity(2)) == 0
    assert cyclic.quotient(3).evaluate(Word.identity(1)) == 0


def test_commutator_dies_in_abelian_quotient(fd):
    comm = Word.parse("abAB")
    assert fd.quotient(2).evaluate(comm) == 0
    assert fd.quotient(3).evaluate(comm) == 0


def test_evaluate_cyclic_power(cyclic):
    q = cyclic.quotient(3)  # Z/8
    a = Word((1,), 1)
    assert q.evaluate(a ** 5) == q.evaluate(a ** -3)
    assert q.evaluate(a ** 8) == 0
    # the index-5 element is reached by composing the generator 5 times
    idx = 0
    a_idx = q.evaluate(a)
    for _ in range(5):
        idx = q.multiply(a_idx, idx)
    assert q.evaluate(a ** 5) == idx


def test_evaluate_homomorphism_property(fd):
    q = fd.quotient(3)
    rng = random.Random(11)
    words = ball(3, 2)
    for _ in range(25):
        u, v = rng.choice(words), rng.choice(words)
        assert q.evaluate(u * v) == q.multiply(q.evaluate(u), q.evaluate(v))
        assert q.evaluate(u.inverse()) == q.invert_element(q.evaluate(u))


# -- nesting and separation ---------------------------------------------------

def test_nesting_all_families(fd, congruence, cyclic):
    assert fd.check_nesting(4).all_pass
    assert congruence.check_nesting(5).all_pass
    assert cyclic.check_nesting(10).all_pass


def test_separation_fd_radius_2(fd):
    report = fd.check_separation(2, 3)
    assert report.all_separated
    assert len(report.levels) == 16


def test_separation_commutator_unseparated(fd):
    report = fd.check_separation(4, 3)
    comm = Word.parse("abAB")
    assert report.levels[comm] is None
    assert comm in report.unseparated


def test_separation_cyclic(cyclic):
    report = cyclic.check_separation(5, 3)
    assert report.all_separated
    assert all(level <= 3 for level in report.levels.values())


def test_separation_level_for_supports(fd, cyclic):
    a, b = Word((1,), 2), Word((2,), 2)
    assert fd.separation_level([a, b, Word.identity(2)]) == 2
    gens = [Word((1,), 2), Word((-1,), 2), Word((2,), 2), Word((-2,), 2)]
    assert fd.separation_level(gens) == 3
    span = [Word((1,), 1) ** j for j in range(-2, 3)]
    assert cyclic.separation_level(span) == 3


def test_separation_level_depth_cap(fd):
    with pytest.raises(ResourceError):
        fd.separation_level([Word.identity(2), Word.parse("abAB")],
                            depth_cap=4)


# -- disk cache ---------------------------------------------------------------

def test_cache_round_trip(tmp_path):
    base = ApproximatedGroup("fd", cache_dir=tmp_path)
    fresh = base.quotient(3)
    path = tmp_path / "quotient-fd-3.json"
    assert path.exists()
    data = json.loads(path.read_text())
    assert data["format_version"] == 1
    assert all(isinstance(v, str) for g in data["generators"] for v in g)
    reloaded = FiniteQuotient.from_cache_dict(data)
    assert reloaded.order == fresh.order
    for i in range(fresh.order):
        assert perm_key(reloaded.elements[i]) == perm_key(fresh.elements[i])


def test_cache_is_used(tmp_path):
    base1 = ApproximatedGroup("cyclic", cache_dir=tmp_path)
    base1.quotient(4)
    base2 = ApproximatedGroup("cyclic", cache_dir=tmp_path)
    q = base2.quotient(4)
    assert q.order == 16
