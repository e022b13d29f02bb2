from .types import CylVec, Domain, FieldJet, cart_to_cyl, cyl_to_cart
from .waveforms import (Affine, CallableProfile, CallableWaveform, Constant, PolyProfile, Ramp,
                        Sinusoid, SpikeTrain, as_profile, as_waveform, waveform_from_config)
from .fixtures import (Field, FunctionField, Poiseuille, RigidHelixFlow, ShearFlow,
                       StagnationSwirl, StraightTube, Womersley)
from .grid import GridData, Gridded, load_grid, save_grid
from .ops import (acceleration, acceleration_array, acceleration_cart, check_point,
                  cylindrical_point, divergence, evaluate, jet, on_axis, partials,
                  pressure_compatibility, velocity_cart)
from .registry import FIXTURES, describe, list_fixtures, make_fixture
