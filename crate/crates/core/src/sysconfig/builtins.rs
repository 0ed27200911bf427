//! Built-in systems, stored as configuration documents.

use super::config::{load_system, parse_config, LoadedSystem, SystemConfig};
use crate::{Error, Result};

const RLD: &str = r#"
name = "rld"
description = "resistor-inductor-diode circuit, i' in -(R/L) i - d|.|(i)"
dim = 1

[params]
R = 1.0
L = 1.0

[field]
kind = "exprs"
exprs = ["-(R/L)*x1"]

[operator]
kind = "subdifferential"
function = { kind = "abs" }

[lyapunov]
v = "x1^2/2"
w = "(R/L)*x1^2 + abs(x1)"

[reference]
kind = "diode-circuit"
rate = "R/L"

[analysis]
box_lo = [-0.9]
box_hi = [0.9]
resolution = 400
t = 10.0
h = 1e-3
x0 = [[0.5]]
"#;

const GRADIENT_FLOW: &str = r#"
name = "gradient-flow"
description = "x' in -grad phi(x) with phi = |x|^2/2"
dim = 2

[field]
kind = "zero"

[operator]
kind = "subdifferential"
function = { kind = "half-norm-squared", scale = 1.0 }

[lyapunov]
v = "(x1^2 + x2^2)/2"
w = "x1^2 + x2^2"

[analysis]
resolution = 400
t = 10.0
h = 1e-3
x0 = [[1.0, 1.0]]
"#;

// phi = (x^2 - 1)^2/4 is not convex: the flow -phi' = x - x^3 is split as
// f = x (Lipschitz on bounded sets) and A = d(x^4/4).
const DOUBLE_WELL: &str = r#"
name = "double-well"
description = "x' = -phi'(x), phi = (x^2 - 1)^2/4, split as f = x, A = d(x^4/4)"
dim = 1

[field]
kind = "exprs"
exprs = ["x1"]

[operator]
kind = "subdifferential"
function = { kind = "custom", value = "x1^4/4", smooth = true }

[lyapunov]
v = "(x1^2 - 1)^2/4"
w = "(x1^3 - x1)^2"

[analysis]
resolution = 400
t = 20.0
h = 1e-3
x0 = [[0.3]]
"#;

const PROJECTED_BOX: &str = r#"
name = "projected-box"
description = "x' in (c - x) - N_C(x), C = [0,1]^2, c = (2, 0.5)"
dim = 2

[field]
kind = "affine"
matrix = [[-1.0, 0.0], [0.0, -1.0]]
offset = [2.0, 0.5]

[operator]
kind = "normal-cone"
set = { kind = "box", lo = [0.0, 0.0], hi = [1.0, 1.0] }

[lyapunov]
v = "((x1 - 1)^2 + (x2 - 0.5)^2)/2"
w = "(x1 - 1)^2 + (x2 - 0.5)^2"

[analysis]
box_lo = [0.0, 0.0]
box_hi = [1.0, 1.0]
resolution = 200
t = 10.0
h = 1e-3
x0 = [[0.2, 0.2]]
"#;

// The explicit treatment of f drifts the energy outward by O(h) per unit time,
// hence the small steps and the looser decrease tolerance.
const ROTATION: &str = r#"
name = "rotation"
description = "conservative rotation x' = (-x2, x1)"
dim = 2

[field]
kind = "affine"
matrix = [[0.0, -1.0], [1.0, 0.0]]

[lyapunov]
v = "(x1^2 + x2^2)/2"
w = "0"

[reference]
kind = "linear"

[analysis]
resolution = 400
s_sublevel = 1.8
t = 20.0
t_burn = 10.0
h = 1e-4
eps = 0.05
x0 = [[1.0, 0.0]]
tol_decrease = 1e-2
prune_h = 0.002
prune_steps = 1000
"#;

const DAMPED_OSCILLATOR: &str = r#"
name = "damped-oscillator"
description = "x1' = x2, x2' = -x1 - c x2"
dim = 2

[params]
c = 0.5

[field]
kind = "exprs"
exprs = ["x2", "-x1 - c*x2"]

[lyapunov]
v = "(x1^2 + x2^2)/2"
w = "c*x2^2"

[analysis]
resolution = 400
s_sublevel = 1.5
t = 60.0
h = 1e-3
x0 = [[1.0, 0.0]]
"#;

const SADDLE: &str = r#"
name = "saddle"
description = "linear saddle x1' = -x1, x2' = x2; stable axis x2 = 0"
dim = 2

[field]
kind = "affine"
matrix = [[-1.0, 0.0], [0.0, 1.0]]

[lyapunov]
v = "x1^2/2"
w = "x1^2"

[reference]
kind = "linear"

[analysis]
box_lo = [-1.0, -1.0]
box_hi = [1.0, 1.0]
resolution = 400
t = 20.0
h = 1e-3
x0 = [[1.0, 0.0]]
"#;

// Not a Lyapunov pair: V grows along every nonzero solution.
const EXPANDING: &str = r#"
name = "expanding"
description = "x' = x with the (invalid) pair V = |x|^2/2, W = |x|^2"
dim = 2

[field]
kind = "affine"
matrix = [[1.0, 0.0], [0.0, 1.0]]

[lyapunov]
v = "(x1^2 + x2^2)/2"
w = "x1^2 + x2^2"

[reference]
kind = "linear"

[analysis]
box_lo = [-1.0, -1.0]
box_hi = [1.0, 1.0]
resolution = 40
t = 1.0
h = 1e-3
x0 = [[0.5, 0.5]]
"#;

const SOURCES: [(&str, &str); 8] = [
    ("rld", RLD),
    ("gradient-flow", GRADIENT_FLOW),
    ("double-well", DOUBLE_WELL),
    ("projected-box", PROJECTED_BOX),
    ("rotation", ROTATION),
    ("damped-oscillator", DAMPED_OSCILLATOR),
    ("saddle", SADDLE),
    ("expanding", EXPANDING),
];

pub fn builtin_names() -> Vec<&'static str> {
    SOURCES.iter().map(|(n, _)| *n).collect()
}

/// Configuration text of a built-in system.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn builtin_catalog() -> Vec<SystemConfig> {
    SOURCES
        .iter()
        .map(|(_, s)| parse_config(s, &[]).expect("built-in configurations parse"))
        .collect()
}

pub fn load_builtin(name: &str, overrides: &[String]) -> Result<LoadedSystem> {
    let src = builtin_source(name).ok_or_else(|| {
        Error::config(
            "name",
            format!("unknown built-in `{name}` (available: {})", builtin_names().join(", ")),
        )
    })?;
    load_system(src, overrides)
}
