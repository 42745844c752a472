"""Small configurations shared by the unit tests."""

from sqgobstacle.fields import GridSpec
from sqgobstacle.kernels import KernelConfig
from sqgobstacle.motion import MotionComponent, RigidMotionSpec
from sqgobstacle.scheme import InitialDatum, SimConfig

MOVING = RigidMotionSpec(h1=MotionComponent(sin=((1.0, 0.2),)), theta=MotionComponent(poly=(0.0, 0.5)))


def small_config(**kw):
    base = dict(
        grid=GridSpec(1.0, 5.0, 32, 64),
        kernel=KernelConfig(0.25, 0.5),
        motion=MOVING,
        dt=0.01,
        t_end=0.05,
        initial=InitialDatum(amplitude=0.25),
    )
    base.update(kw)
    return SimConfig(**base)
