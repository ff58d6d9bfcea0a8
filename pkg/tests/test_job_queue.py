import threading

import pytest

from ensquant.scheduler import JobQueue
from ensquant.scheduler.job_queue import priority_value


def test_priority_names():
    assert priority_value("high") < priority_value("normal") < priority_value("LOW")
    assert priority_value(5) == 5
    with pytest.raises(ValueError):
        priority_value("urgent")


def test_results_are_keyed_and_sorted():
    with JobQueue(workers=3) as q:
        for k in (3, 1, 2):
            q.submit(k, lambda v: v * v, k)
        assert q.results() == {1: 1, 2: 4, 3: 9}
        assert list(q.results()) == []


def test_exceptions_become_results():
    def boom():
        raise KeyError("lost")

    with JobQueue(workers=2) as q:
        q.submit("ok", lambda: 1)
        q.submit("bad", boom)
        out = q.results()
    assert out["ok"] == 1
    assert isinstance(out["bad"], KeyError)


def test_high_priority_runs_first():
    gate = threading.Event()
    order = []
    with JobQueue(workers=1) as q:
        q.submit("gate", gate.wait, 5)
        q.submit("normal", order.append, "normal")
        q.submit("low", order.append, "low", priority="low")
        q.submit("high", order.append, "high", priority="high")
        gate.set()
        q.results()
    assert order == ["high", "normal", "low"]


def test_needs_a_worker():
    with pytest.raises(ValueError):
        JobQueue(workers=0)
