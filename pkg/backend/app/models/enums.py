"""
Enumerations shared by the slice, pool, classifier and emulator models
"""

from enum import Enum


class SliceMode(str, Enum):
    """Deployment mode of a slice"""
    INTEGRATED = "Integrated"
    STANDALONE = "Standalone"


class ServiceClass(str, Enum):
    EMBB = "EMBB"
    URLLC = "URLLC"
    MMTC = "MMTC"
    CUSTOM = "Custom"


class Isolation(str, Enum):
    SOFT = "Soft"
    HARD = "Hard"


class TenantControl(str, Enum):
    """How much of the infrastructure a tenant may drive"""
    MANAGED = "Managed"
    SHARED_CONTROL = "SharedControl"
    FULL_CONTROL = "FullControl"


class Orbit(str, Enum):
    LEO = "LEO"
    MEO = "MEO"
    GEO = "GEO"


class OrbitPreference(str, Enum):
    LEO = "LEO"
    MEO = "MEO"
    GEO = "GEO"
    ANY = "Any"


class LifecycleState(str, Enum):
    """Slice instance lifecycle states"""
    PENDING = "Pending"
    PREPARING = "Preparing"
    INSTANTIATING = "Instantiating"
    ACTIVE = "Active"
    MODIFYING = "Modifying"
    DEACTIVATED = "Deactivated"
    TERMINATING = "Terminating"
    TERMINATED = "Terminated"
    FAILED = "Failed"


class LifecycleEvent(str, Enum):
    PREPARE = "Prepare"
    INSTANTIATE = "Instantiate"
    ACTIVATE_DONE = "ActivateDone"
    MODIFY = "Modify"
    MODIFY_DONE = "ModifyDone"
    DEACTIVATE = "Deactivate"
    REACTIVATE = "Reactivate"
    TERMINATE = "Terminate"
    TERMINATE_DONE = "TerminateDone"
    FAIL = "Fail"


class SatQosClassId(str, Enum):
    """Satellite-side service classes, most to least important"""
    RT_CONVERSATIONAL = "RT-Conversational"
    STREAMING = "Streaming"
    INTERACTIVE = "Interactive"
    BACKGROUND = "Background"


class Mark(str, Enum):
    """Direction a classified flow travels relative to the satellite subnet"""
    TO_SATELLITE = "ToSatellite"
    FROM_SATELLITE = "FromSatellite"


class LinkDirection(str, Enum):
    FORWARD = "forward"
    RETURN = "return"


class TrafficPattern(str, Enum):
    CBR = "CBR"
    POISSON = "Poisson"


class EventKind(str, Enum):
    CREATED = "Created"
    STATE_CHANGED = "StateChanged"
    MODIFIED = "Modified"
    DELETED = "Deleted"
    ALARM = "Alarm"


class ScenarioStatus(str, Enum):
    """Scenario run status states"""
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"
