"""System-wide constants for subpuf."""

# System Constants
SYSTEM_NAME = "subpuf"
SYSTEM_VERSION = "0.1.0"
SYSTEM_DESCRIPTION = "Self-regulated reconfigurable subthreshold PUF simulator"

# Physical Constants (SI)
BOLTZMANN_K = 1.380649e-23
ELECTRON_CHARGE_Q = 1.602176634e-19
CELSIUS_OFFSET = 273.15
T_REF = 300.15  # 27 degC, the nominal corner

# Nominal Operating Point
NOMINAL_SUPPLY_V = 1.2
NOMINAL_TEMPERATURE_K = T_REF
MOBILITY_TEMP_EXPONENT = -1.5

# Solver Constants
BISECTION_XTOL_V = 1e-6
BISECTION_MAX_ITER = 60

# Array Defaults
DEFAULT_ROWS = 32
DEFAULT_COLS = 128
DEFAULT_CELLS_PER_REGULATOR = 32
STAGES_PER_CELL = 4

# Stabilization Defaults
DEFAULT_TMV_K = 11
DEFAULT_GOLDEN_VOTES = 1001
DEFAULT_ENROLL_VOTES = 11
DEFAULT_SWEEP_EVALS = 101
DEFAULT_VPW_SWEEP = (-0.4, -0.2, 0.0, 0.2, 0.4)
VPW_LIMIT_V = 0.4

# Metrics Defaults
NIST_ALPHA = 0.01
AUTOCORR_Z95 = 1.96
DEFAULT_AUTOCORR_BOUND_SCALE = 2 ** 0.5
DEFAULT_AUTOCORR_MAX_LAG = 4000

# Random Stream Purposes (spawn-key prefixes)
STREAM_MISMATCH = 1
STREAM_GLOBAL = 2
STREAM_REGULATOR = 3
STREAM_NOISE = 4

# Noise Stream Purposes (second key element under STREAM_NOISE)
PURPOSE_GOLDEN = 0
PURPOSE_READ = 1
PURPOSE_ENROLL = 2
PURPOSE_ORACLE = 3
PURPOSE_SWEEP = 4

# Transistor Roles
ROLE_NMOS = "nmos"
ROLE_PMOS = "pmos"
ROLE_NATIVE = "native"
ROLE_CODES = {ROLE_NMOS: 0, ROLE_PMOS: 1, ROLE_NATIVE: 2}

# Cell Modes
MODE_ORIGINAL = "original"
MODE_RECONFIGURED = "reconfigured"

# R-MAP Provenance
PROVENANCE_EVB = "evb"
PROVENANCE_TEMP_ORACLE = "temp_oracle"
PROVENANCE_MANUAL = "manual"
PROVENANCES = [PROVENANCE_EVB, PROVENANCE_TEMP_ORACLE, PROVENANCE_MANUAL]

# Artifact Format
MAP_FORMAT_VERSION = 1
MAP_FORMAT_MAGIC = "SUBPUF-MAP"

# CLI Exit Codes
EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

# Log Levels
LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
LOG_FORMATS = ["json", "console"]
