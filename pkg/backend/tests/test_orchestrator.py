import random
import shutil
import tempfile
import time
import unittest
from pathlib import Path
from unittest.mock import patch

from app.core.errors import AdmissionRace
from app.models.classifier import FlowMetadata, Snssai
from app.models.enums import EventKind, Isolation, LifecycleState, ScenarioStatus, SliceMode, TenantControl
from app.models.requests import QosDelta, StandaloneRequest, SubscriptionRequest
from app.models.scenario import ScenarioSpec, TrafficSpec
from app.services.event_log import EventLog
from app.services.orchestrator import ApiError, SliceManagementService
from tests.fixtures import make_profile, nf, nssi_request, small_config, standalone_request

St = LifecycleState


class FakeClock:
    def __init__(self, start: float = 1000.0):
        self.now = start

    def __call__(self) -> float:
        self.now += 1.0
        return self.now


def wait_for_scenario(service, scenario_id, timeout_s=60.0):
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        result = service.get_scenario(scenario_id)
        if result.status in (ScenarioStatus.COMPLETED, ScenarioStatus.FAILED):
            return result
        time.sleep(0.05)
    raise AssertionError(f"scenario {scenario_id} did not finish")


class OrchestratorTestCase(unittest.TestCase):

    def setUp(self):
        self.config = small_config()
        self.service = SliceManagementService(self.config, clock=FakeClock())

    def tearDown(self):
        self.service.shutdown()

    def assertApiError(self, status_code, code, call, *args, **kwargs):
        with self.assertRaises(ApiError) as ctx:
            call(*args, **kwargs)
        self.assertEqual((ctx.exception.status_code, ctx.exception.code), (status_code, code))
        return ctx.exception


class TestCreate(OrchestratorTestCase):

    def test_integrated_slice_becomes_active(self):
        response = self.service.allocate_nssi(nssi_request("s1", sd=1, qfi=[5]))
        self.assertEqual(response.state, St.ACTIVE)
        self.assertIsNone(response.failure_reason)

        detail = self.service.get_slice("s1")
        self.assertEqual(detail.chain.nf_ids, ["classifier-attach", "gse-encapsulator", "qos-scheduler", "pep-accelerator"])
        self.assertEqual(detail.instance.tenant, "operator")
        self.assertEqual(detail.instance.e2e_slice_ref, "nsi-s1")
        tables = sorted({r["table"] for r in detail.rules})
        self.assertEqual(tables, ["cn-edge/FromSatellite", "hub-edge/FromSatellite", "hub-edge/ToSatellite", "ran-edge/ToSatellite"])
        self.assertEqual(self.service.pool_snapshot().beam("b1").allocated_gbr_fwd, 2.0)

    def test_standalone_slice_returns_service_endpoint(self):
        response = self.service.create_slice(standalone_request("sa1", isolation=Isolation.HARD))
        self.assertEqual(response.state, St.ACTIVE)
        self.assertEqual(response.service_endpoint.prefixes[0].src_prefix, "10.0.0.0/16")
        self.assertIn("ipsec-encryptor", self.service.get_slice("sa1").chain.nf_ids)

    def test_lifecycle_events_in_order(self):
        seen = []
        self.service.notifier.add_listener(seen.append)
        self.service.allocate_nssi(nssi_request("s1", sd=1))
        self.service.notifier.flush()

        self.assertEqual([e.seq for e in seen], [1, 2, 3, 4])
        self.assertEqual(seen[0].kind, EventKind.CREATED)
        self.assertEqual(
            [(e.old_state, e.new_state) for e in seen[1:]],
            [(St.PENDING, St.PREPARING), (St.PREPARING, St.INSTANTIATING), (St.INSTANTIATING, St.ACTIVE)],
        )
        timestamps = [e.timestamp for e in seen]
        self.assertEqual(timestamps, sorted(set(timestamps)))
        self.assertEqual(self.service.list_events(since=2), seen[2:])

    def test_duplicate_is_rejected(self):
        self.service.allocate_nssi(nssi_request("s1", sd=1))
        self.assertApiError(409, "DUPLICATE", self.service.allocate_nssi, nssi_request("s1", sd=2))

    def test_capacity_reject_records_failed_slice(self):
        self.service.allocate_nssi(nssi_request("big", sd=1, gbr=8.0, mbr=8.0))
        pool_before = self.service.pool_snapshot()

        error = self.assertApiError(422, "GBR_CAPACITY", self.service.allocate_nssi, nssi_request("s2", sd=2, gbr=4.0, mbr=4.0))
        self.assertEqual(error.stage, "admission")
        failed = self.service.instances()["s2"]
        self.assertEqual(failed.state, St.FAILED)
        self.assertEqual(failed.failure_reason, "admission:GBR_CAPACITY")
        self.assertIsNone(failed.allocation)
        self.assertEqual(self.service.pool_snapshot(), pool_before)

        # a Failed slice id can be reused
        self.assertEqual(self.service.allocate_nssi(nssi_request("s2", sd=2, gbr=1.0, mbr=1.0)).state, St.ACTIVE)

    def test_latency_reject(self):
        error = self.assertApiError(422, "LATENCY", self.service.create_slice, standalone_request("sa1", pdb=100.0))
        self.assertEqual(error.stage, "admission")
        self.assertEqual(self.service.instances()["sa1"].failure_reason, "admission:LATENCY")

    def test_validation_failure_is_not_recorded(self):
        request = StandaloneRequest(profile=make_profile("sa1", mode=SliceMode.STANDALONE))
        error = self.assertApiError(400, "NO_PREFIXES", self.service.create_slice, request)
        self.assertEqual(error.stage, "validate")
        self.assertNotIn("sa1", self.service.instances())

    def test_unknown_beam_is_a_validation_failure(self):
        self.assertApiError(400, "UNKNOWN_BEAM", self.service.allocate_nssi, nssi_request("s1", beams=["b1", "b9"]))
        self.assertEqual(self.service.instances(), {})

    def test_conflicting_rules(self):
        self.service.allocate_nssi(nssi_request("s1", sst=1))
        pool_before = self.service.pool_snapshot()
        error = self.assertApiError(409, "CONFLICTING_RULES", self.service.allocate_nssi, nssi_request("s2", sst=1))
        self.assertEqual(error.stage, "classify")
        self.assertEqual(self.service.instances()["s2"].failure_reason, "classify:CONFLICTING_RULES")
        self.assertEqual(self.service.pool_snapshot(), pool_before)

    def test_uncoverable_after_catalog_edit(self):
        catalog = [d for d in self.service.get_catalog() if "encrypt" not in d.provides]
        self.service.replace_catalog(catalog)
        error = self.assertApiError(422, "UNCOVERABLE", self.service.create_slice, standalone_request(isolation=Isolation.HARD))
        self.assertEqual(error.stage, "compose")

    def test_duplicate_catalog_entries(self):
        self.assertApiError(400, "DUPLICATE_NF", self.service.replace_catalog, [nf("a", ["x"]), nf("a", ["y"])])


class TestFaultInjection(OrchestratorTestCase):

    def test_classifier_crash_leaves_pool_untouched(self):
        self.service.allocate_nssi(nssi_request("s1", sd=1))
        pool_before = self.service.pool_snapshot()
        rules_before = self.service.rules_view()
        with patch("app.services.orchestrator.compile_stitch_tables", side_effect=RuntimeError("boom")):
            error = self.assertApiError(500, "INTERNAL", self.service.allocate_nssi, nssi_request("s2", sd=2))
        self.assertEqual(error.stage, "classify")
        self.assertEqual(self.service.pool_snapshot(), pool_before)
        self.assertEqual(self.service.rules_view(), rules_before)
        self.assertEqual(self.service.instances()["s2"].failure_reason, "classify:INTERNAL")

    def test_allocation_race(self):
        with patch("app.services.orchestrator.allocate", side_effect=AdmissionRace("s1", "GBR_CAPACITY")):
            error = self.assertApiError(422, "ADMISSION_RACE", self.service.allocate_nssi, nssi_request("s1", sd=1))
        self.assertEqual(error.stage, "allocate")
        self.assertEqual(self.service.pool_snapshot().allocations, {})


class TestModifyAndDelete(OrchestratorTestCase):

    def setUp(self):
        super().setUp()
        self.service.allocate_nssi(nssi_request("s1", sd=1))

    def test_modify(self):
        response = self.service.modify_nssi("s1", QosDelta(gbr_mbps=3.0, mbr_mbps=5.0))
        self.assertEqual(response.state, St.ACTIVE)
        self.assertEqual(self.service.pool_snapshot().beam("b1").allocated_gbr_fwd, 3.0)
        self.assertEqual(self.service.instances()["s1"].profile.qos.mbr_mbps, 5.0)
        kinds = [e.kind for e in self.service.list_events(slice_id="s1")]
        self.assertEqual(kinds[-1], EventKind.MODIFIED)

    def test_rejected_modify_keeps_old_reservation(self):
        before = self.service.instances()["s1"]
        pool_before = self.service.pool_snapshot()
        error = self.assertApiError(422, "GBR_CAPACITY", self.service.modify_nssi, "s1", QosDelta(gbr_mbps=20.0, mbr_mbps=20.0))
        self.assertEqual(error.stage, "admission")
        after = self.service.instances()["s1"]
        self.assertEqual(after.state, St.ACTIVE)
        self.assertEqual(after.profile, before.profile)
        self.assertEqual(after.allocation, before.allocation)
        self.assertEqual(self.service.pool_snapshot(), pool_before)

    def test_modify_validation(self):
        self.assertApiError(400, "MBR_LT_GBR", self.service.modify_nssi, "s1", QosDelta(mbr_mbps=1.0))

    def test_deallocate_is_idempotent(self):
        self.assertEqual(self.service.deallocate("s1").state, St.TERMINATED)
        events = len(self.service.list_events())
        self.assertEqual(self.service.deallocate("s1").state, St.TERMINATED)
        self.assertEqual(len(self.service.list_events()), events)
        self.assertEqual(self.service.pool_snapshot().allocations, {})
        self.assertEqual(self.service.list_events()[-1].kind, EventKind.DELETED)

    def test_modify_terminated(self):
        self.service.deallocate("s1")
        self.assertApiError(409, "NOT_ACTIVE", self.service.modify_nssi, "s1", QosDelta(gbr_mbps=1.0))

    def test_unknown_slice(self):
        self.assertApiError(404, "NOT_FOUND", self.service.get_slice, "nope")
        self.assertApiError(404, "NOT_FOUND", self.service.deallocate, "nope")

    def test_deactivate_and_activate(self):
        pool_before = self.service.pool_snapshot()
        self.assertEqual(self.service.deactivate("s1").state, St.DEACTIVATED)
        self.assertEqual(self.service.get_slice("s1").rules, [])
        self.assertEqual(self.service.pool_snapshot(), pool_before)
        self.assertApiError(409, "ILLEGAL_TRANSITION", self.service.deactivate, "s1")
        self.assertApiError(409, "NOT_ACTIVE", self.service.modify_nssi, "s1", QosDelta(gbr_mbps=1.0))

        self.assertEqual(self.service.activate("s1").state, St.ACTIVE)
        self.assertTrue(self.service.get_slice("s1").rules)

    def test_deactivated_slice_can_be_deleted(self):
        self.service.deactivate("s1")
        self.assertEqual(self.service.deallocate("s1").state, St.TERMINATED)


class TestTenants(OrchestratorTestCase):

    def test_unknown_tenant(self):
        self.assertApiError(403, "UNKNOWN_TENANT", self.service.list_slices, "stranger")

    def test_managed_tenant(self):
        self.service.allocate_nssi(nssi_request("op", sd=1))
        customer = "maritime-customer"
        self.assertEqual(self.service.create_slice(standalone_request("mine"), customer).state, St.ACTIVE)
        self.assertEqual([s.slice_id for s in self.service.list_slices(customer)], ["mine"])
        self.assertEqual([s.slice_id for s in self.service.list_slices()], ["mine", "op"])
        self.assertApiError(404, "NOT_FOUND", self.service.get_slice, "op", customer)
        self.assertApiError(403, "FORBIDDEN", self.service.modify_nssi, "mine", QosDelta(gbr_mbps=1.0), customer)
        self.assertApiError(403, "FORBIDDEN", self.service.pool_view, customer)
        self.assertTrue(all(e.slice_id == "mine" for e in self.service.list_events(customer)))

    def test_control_level(self):
        request = standalone_request("sa1")
        request.profile.tenant_control = TenantControl.FULL_CONTROL
        self.assertApiError(403, "CONTROL_LEVEL", self.service.create_slice, request, "mvno-partner")

    def test_shared_control_can_modify_but_not_edit_catalog(self):
        self.service.create_slice(standalone_request("sa1"), "mvno-partner")
        self.assertEqual(self.service.modify_nssi("sa1", QosDelta(gbr_mbps=1.0), "mvno-partner").state, St.ACTIVE)
        self.assertApiError(403, "FORBIDDEN", self.service.replace_catalog, [], "mvno-partner")
        own = self.service.subscribe(SubscriptionRequest(kind="log", slice_id="sa1"), "mvno-partner")
        self.assertEqual((own.slice_id, own.owner), ("sa1", "mvno-partner"))

    def test_unsubscribe_unknown(self):
        subscription = self.service.subscribe(SubscriptionRequest(kind="log"))
        self.service.unsubscribe(subscription.subscription_id)
        self.assertApiError(404, "NOT_FOUND", self.service.unsubscribe, subscription.subscription_id)


class TestSubscriptions(OrchestratorTestCase):

    def setUp(self):
        super().setUp()
        self.service.allocate_nssi(nssi_request("op", sd=1))
        self.service.create_slice(standalone_request("mine"), "maritime-customer")

    def test_managed_tenant_follows_its_own_slice(self):
        seen = []
        self.service.notifier.add_listener(seen.append)
        subscription = self.service.subscribe(SubscriptionRequest(kind="log", slice_id="mine"), "maritime-customer")
        self.assertEqual(subscription.owner, "maritime-customer")
        self.service.deallocate("mine", "maritime-customer")
        self.service.notifier.flush()
        self.assertIn("mine", {e.slice_id for e in seen})
        self.service.unsubscribe(subscription.subscription_id, "maritime-customer")

    def test_foreign_slice_is_not_found(self):
        self.assertApiError(404, "NOT_FOUND", self.service.subscribe,
                            SubscriptionRequest(kind="log", slice_id="op"), "maritime-customer")
        self.assertApiError(404, "NOT_FOUND", self.service.subscribe,
                            SubscriptionRequest(kind="log", slice_id="op"), "mvno-partner")

    def test_every_slice_needs_full_control(self):
        for tenant in ("maritime-customer", "mvno-partner"):
            self.assertApiError(403, "FORBIDDEN", self.service.subscribe, SubscriptionRequest(kind="log"), tenant)
        self.assertIsNone(self.service.subscribe(SubscriptionRequest(kind="log")).slice_id)

    def test_operator_sees_customer_slices(self):
        subscription = self.service.subscribe(SubscriptionRequest(kind="log", slice_id="mine"))
        self.assertEqual(subscription.owner, self.config.default_tenant)

    def test_only_owner_or_full_control_unsubscribes(self):
        customer = self.service.subscribe(SubscriptionRequest(kind="log", slice_id="mine"), "maritime-customer")
        self.assertApiError(404, "NOT_FOUND", self.service.unsubscribe, customer.subscription_id, "mvno-partner")
        self.service.unsubscribe(customer.subscription_id)
        operator = self.service.subscribe(SubscriptionRequest(kind="log", slice_id="mine"))
        self.assertApiError(404, "NOT_FOUND", self.service.unsubscribe, operator.subscription_id, "maritime-customer")


class TestScenario(OrchestratorTestCase):

    def test_isolation_scenario(self):
        self.service.allocate_nssi(nssi_request("victim", sd=1, isolation=Isolation.HARD))
        self.service.allocate_nssi(nssi_request("aggressor", sd=2, gbr=2.0, mbr=12.0))
        spec = ScenarioSpec(duration_s=0.5, seed=3, flows=[
            TrafficSpec(meta=FlowMetadata(snssai=Snssai(sst=1, sd=1)), beam_id="b1", rate_mbps=2.0, stop_s=0.5),
            TrafficSpec(meta=FlowMetadata(snssai=Snssai(sst=1, sd=2)), beam_id="b1", rate_mbps=120.0,
                        pattern="Poisson", stop_s=0.5),
        ])
        queued = self.service.submit_scenario(spec)
        result = wait_for_scenario(self.service, queued.scenario_id)
        self.assertEqual(result.status, ScenarioStatus.COMPLETED)
        verdicts = {v.slice_id: v.passed for v in result.verdicts}
        self.assertTrue(verdicts["victim"])
        self.assertLessEqual(result.report.slices["victim"].loss_ratio, 0.02)

    def test_unknown_beam(self):
        spec = ScenarioSpec(duration_s=0.5, flows=[TrafficSpec(beam_id="b9", rate_mbps=1.0, stop_s=0.5)])
        self.assertApiError(400, "UNKNOWN_BEAM", self.service.submit_scenario, spec)

    def test_unknown_scenario(self):
        self.assertApiError(404, "NOT_FOUND", self.service.get_scenario, "missing")


class TestRecovery(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.root = Path(self._tmp.name)
        self.config = small_config(fwd_mbps=20.0, rtn_mbps=4.0)

    def tearDown(self):
        self._tmp.cleanup()

    def _operation(self, service, rng):
        slice_id = f"s{rng.randint(0, 5)}"
        sd = int(slice_id[1:]) + 1
        choice = rng.random()
        gbr = rng.choice([1.0, 2.0, 4.0, 9.0])
        if choice < 0.3:
            service.allocate_nssi(nssi_request(slice_id, sd=sd, gbr=gbr, mbr=gbr * 2))
        elif choice < 0.45:
            service.create_slice(standalone_request(slice_id, src_prefix=f"10.{sd}.0.0/16", gbr=gbr, mbr=gbr))
        elif choice < 0.6:
            service.modify_nssi(slice_id, QosDelta(gbr_mbps=gbr, mbr_mbps=gbr * 2))
        elif choice < 0.7:
            service.deactivate(slice_id)
        elif choice < 0.8:
            service.activate(slice_id)
        else:
            service.deallocate(slice_id)

    def test_every_prefix_recovers(self):
        rng = random.Random(2024)
        live_dir = self.root / "live"
        service = SliceManagementService(self.config, data_dir=live_dir, snapshot_interval=7, clock=FakeClock())
        try:
            for step in range(100):
                try:
                    self._operation(service, rng)
                except ApiError:
                    pass

                copy_dir = self.root / f"copy-{step}"
                shutil.copytree(live_dir, copy_dir)
                recovered = SliceManagementService(self.config, data_dir=copy_dir, clock=FakeClock())
                try:
                    self.assertEqual(recovered.instances(), service.instances(), msg=f"step {step}")
                    self.assertEqual(recovered.pool_snapshot(), service.pool_snapshot(), msg=f"step {step}")
                    self.assertEqual(recovered.rules_view(), service.rules_view(), msg=f"step {step}")
                finally:
                    recovered.shutdown()
                shutil.rmtree(copy_dir)
        finally:
            service.shutdown()

    def test_failed_append_leaves_live_state_untouched(self):
        service = SliceManagementService(self.config, data_dir=self.root / "data", clock=FakeClock())
        try:
            service.allocate_nssi(nssi_request("s1", sd=1))
            before = (service.instances(), service.pool_snapshot(), service.rules_view(), service.list_events())
            attempts = [
                lambda: service.allocate_nssi(nssi_request("s2", sd=2)),
                lambda: service.modify_nssi("s1", QosDelta(gbr_mbps=2.0, mbr_mbps=4.0)),
                lambda: service.deactivate("s1"),
                lambda: service.deallocate("s1"),
            ]
            with patch.object(EventLog, "append_instance", side_effect=OSError("disk full")):
                for attempt in attempts:
                    with self.assertRaises(OSError):
                        attempt()
                    after = (service.instances(), service.pool_snapshot(), service.rules_view(), service.list_events())
                    self.assertEqual(after, before)
            self.assertEqual(service.deallocate("s1").state, St.TERMINATED)
        finally:
            service.shutdown()

    def test_restart_continues_sequences(self):
        data_dir = self.root / "data"
        first = SliceManagementService(self.config, data_dir=data_dir, clock=FakeClock())
        first.allocate_nssi(nssi_request("s1", sd=1))
        events = first.list_events()
        first.shutdown()

        second = SliceManagementService(self.config, data_dir=data_dir, clock=FakeClock(start=0.0))
        try:
            self.assertEqual(second.list_events(), events)
            second.allocate_nssi(nssi_request("s2", sd=2))
            later = second.list_events(since=events[-1].seq)
            self.assertEqual(later[0].seq, events[-1].seq + 1)
            self.assertGreater(later[0].timestamp, events[-1].timestamp)
            self.assertEqual(second.instances()["s2"].creation_index, 1)
        finally:
            second.shutdown()


if __name__ == "__main__":
    unittest.main()
