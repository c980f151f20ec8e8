"""
Shared builders for the test suite
"""

import itertools
import json
from pathlib import Path
from typing import List, Optional

from app.core.config import DEFAULT_SERVICE_CONFIG
from app.core.service_config import BeamConfig, HostConfig, ServiceConfig, load_service_config
from app.models.catalog import NfDescriptor
from app.models.enums import Isolation, Orbit, ServiceClass, SliceMode
from app.models.requests import NssiRequest, StandaloneRequest
from app.models.scenario import ScenarioSpec
from app.models.slice import FiveGQos, SliceProfile, StitchingInfo
from app.services.emulator import build_network, run_scenario
from app.services.orchestrator import SliceManagementService

SAMPLES_DIR = Path(__file__).resolve().parent.parent / "samples"


def default_config() -> ServiceConfig:
    return load_service_config(DEFAULT_SERVICE_CONFIG)


def small_config(orbit: Orbit = Orbit.GEO, fwd_mbps: float = 10.0, rtn_mbps: float = 2.0) -> ServiceConfig:
    """One beam, one roomy host, the default catalog"""
    config = default_config()
    return config.model_copy(update={
        "orbit": orbit,
        "beams": [BeamConfig(id="b1", fwd_mbps=fwd_mbps, rtn_mbps=rtn_mbps)],
        "hosts": [HostConfig(id="h1", cpu=64, mem=65536)],
    })


def nf(nf_id: str, provides: List[str], cost: int = 1, stage: int = 0, cpu: int = 1, mem: int = 128,
       latency_ms: float = 0.1) -> NfDescriptor:
    return NfDescriptor(nf_id=nf_id, stage=stage, provides=provides, cpu=cpu, mem=mem, latency_ms=latency_ms, cost=cost)


def make_profile(
    slice_id: str = "s1",
    gbr: float = 2.0,
    mbr: float = 4.0,
    pdb: float = 400.0,
    beams: Optional[List[str]] = None,
    mode: SliceMode = SliceMode.INTEGRATED,
    service_class: ServiceClass = ServiceClass.EMBB,
    isolation: Isolation = Isolation.SOFT,
    **qos_extra,
) -> SliceProfile:
    return SliceProfile(
        slice_id=slice_id,
        mode=mode,
        service_class=service_class,
        qos=FiveGQos(gbr_mbps=gbr, mbr_mbps=mbr, pdb_ms=pdb, **qos_extra),
        isolation=isolation,
        coverage_beams=beams if beams is not None else ["b1"],
    )


def nssi_request(slice_id: str = "s1", sst: int = 1, sd: Optional[int] = None, qfi: Optional[List[int]] = None,
                 **profile_kwargs) -> NssiRequest:
    return NssiRequest(
        profile=make_profile(slice_id, mode=SliceMode.INTEGRATED, **profile_kwargs),
        e2e_slice_ref=f"nsi-{slice_id}",
        stitching=StitchingInfo(snssai={"sst": sst, "sd": sd}, qfi=qfi or []),
    )


def standalone_request(slice_id: str = "sa1", src_prefix: str = "10.0.0.0/16", **profile_kwargs) -> StandaloneRequest:
    return StandaloneRequest(
        profile=make_profile(slice_id, mode=SliceMode.STANDALONE, **profile_kwargs),
        ingress={"prefixes": [{"src_prefix": src_prefix}]},
    )


def load_sample(name: str) -> dict:
    return json.loads((SAMPLES_DIR / name).read_text())


def demo_report() -> str:
    """Bundled demo scenario (seed 42) against the two sample slices, as report JSON"""
    service = SliceManagementService(default_config(), clock=itertools.count(1000.0).__next__)
    try:
        service.allocate_nssi(NssiRequest.model_validate(load_sample("integrated_request.json")))
        service.create_slice(StandaloneRequest.model_validate(load_sample("standalone_request.json")))
        network = build_network(list(service.instances().values()), service.pool_snapshot(), config=service.config)
    finally:
        service.shutdown()
    scenario = ScenarioSpec.model_validate(load_sample("demo_scenario.json"))
    report = run_scenario(network, scenario.flows, scenario.duration_s, scenario.seed)
    return report.model_dump_json(indent=2)
