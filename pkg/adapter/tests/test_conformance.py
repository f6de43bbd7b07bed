"""The adapter must pass the pipeline's provider conformance suite, which is
the contract the pipeline's remote client is written against."""

from speechcorpus.providers.conformance import assert_conformant, run_conformance

from speechcorpus_adapter.config import AdapterConfig


def test_stub_adapter_is_conformant(stub_adapter_url):
    results = assert_conformant(stub_adapter_url)
    assert {r.name for r in results} == {
        "health",
        "transcribe",
        "completeness",
        "embed",
        "music",
        "punctuate",
    }


def test_overload_returns_503_with_retry_after(serve_adapter):
    # one slot plus an artificial floor on handling time guarantees the six
    # parallel probes collide
    config = AdapterConfig(max_concurrent=1, min_request_s=0.3)
    with serve_adapter(config) as url:
        assert_conformant(url, overload_requests=6)


def test_generous_capacity_never_sheds_load(serve_adapter):
    config = AdapterConfig(max_concurrent=64)
    with serve_adapter(config) as url:
        results = run_conformance(url, overload_requests=4)
    by_name = {r.name: r for r in results}
    # the overload probe must fail here: nothing should be turned away
    assert not by_name["overload_503"].passed
    assert all(r.passed for name, r in by_name.items() if name != "overload_503")
