//! Named built-ins for `σ`, `g`, `φ` and `κ`.
//!
//! | kind  | preset            | meaning                                  |
//! |-------|-------------------|------------------------------------------|
//! | sigma | `zero`            | `σ ≡ 0`                                  |
//! | sigma | `const:c`         | `σ ≡ c`                                  |
//! | sigma | `linear`          | `σ(x) = x`                               |
//! | sigma | `holder:γ[:c]`    | `min(|x|^γ, c(1+|x|))`, `c` defaults to 1 |
//! | sigma | `sqrt`            | `√(x⁺)`                                  |
//! | g     | `zero`, `const:c` | catalyst intensity                       |
//! | g     | `ramp:c`          | `g(t) = c·t`                             |
//! | phi   | `bump:[a,b]`      | unit-mass polynomial bump on `[a, b]`    |
//! | phi   | `bump:[a,b]:h`    | bump of height `h`                       |
//! | phi   | `zero`            | `φ ≡ 0` on `[-1, 1]`                     |
//! | kappa | `one`, `const:c`  | constant kernel                          |
//! | kappa | `two-plus-sin`    | `κ(s,t) = 2 + sin(s+t)`                  |

use std::sync::Arc;

use volterra_core::kernels::KernelSpec;
use volterra_core::sie::ScalarFn;
use volterra_core::{DiffusionCoefficient, TestFunction};

use crate::error::{param, LabResult};

fn number(kind: &str, s: &str) -> LabResult<f64> {
    s.trim().parse::<f64>().map_err(|_| param!("{kind} preset: cannot read number from {s:?}"))
}

pub fn sigma(spec: &str) -> LabResult<DiffusionCoefficient> {
    let parts: Vec<&str> = spec.split(':').collect();
    Ok(match parts.as_slice() {
        ["zero"] => DiffusionCoefficient::zero(),
        ["const", c] => DiffusionCoefficient::constant(number("sigma", c)?),
        ["linear"] => DiffusionCoefficient::linear(),
        ["sqrt"] => DiffusionCoefficient::sqrt_positive(),
        ["holder", g] => DiffusionCoefficient::holder_capped(number("sigma", g)?, 1.0)?,
        ["holder", g, c] => DiffusionCoefficient::holder_capped(number("sigma", g)?, number("sigma", c)?)?,
        _ => return Err(param!("unknown sigma preset {spec:?} (zero, const:c, linear, holder:g[:c], sqrt)")),
    })
}

/// `None` for `g ≡ 0`.
pub fn catalyst(spec: &str) -> LabResult<Option<ScalarFn>> {
    let parts: Vec<&str> = spec.split(':').collect();
    Ok(match parts.as_slice() {
        ["zero"] => None,
        ["const", c] => {
            let c = number("g", c)?;
            Some(Arc::new(move |_| c))
        }
        ["ramp", c] => {
            let c = number("g", c)?;
            Some(Arc::new(move |t| c * t))
        }
        _ => return Err(param!("unknown g preset {spec:?} (zero, const:c, ramp:c)")),
    })
}

pub fn phi(spec: &str) -> LabResult<TestFunction> {
    if spec == "zero" {
        return Ok(TestFunction::zero(-1.0, 1.0)?);
    }
    let rest = spec
        .strip_prefix("bump:[")
        .ok_or_else(|| param!("unknown phi preset {spec:?} (bump:[a,b], bump:[a,b]:h, zero)"))?;
    let (interval, height) = rest.split_once(']').ok_or_else(|| param!("phi preset {spec:?}: missing ']'"))?;
    let (a, b) = interval.split_once(',').ok_or_else(|| param!("phi preset {spec:?}: expected [a,b]"))?;
    let (a, b) = (number("phi", a)?, number("phi", b)?);
    Ok(match height {
        "" => TestFunction::unit_bump(a, b)?,
        h => TestFunction::bump(
            a,
            b,
            number("phi", h.strip_prefix(':').ok_or_else(|| param!("phi preset {spec:?}: expected ':h'"))?)?,
        )?,
    })
}

pub fn kappa(spec: &str) -> LabResult<KernelSpec> {
    let parts: Vec<&str> = spec.split(':').collect();
    Ok(match parts.as_slice() {
        ["one"] => KernelSpec::smooth(Arc::new(|_, _| 1.0), 1.0, 0.0)?,
        ["const", c] => {
            let c = number("kappa", c)?;
            KernelSpec::smooth(Arc::new(move |_, _| c), c, 0.0)?
        }
        ["two-plus-sin"] => KernelSpec::smooth(Arc::new(|s: f64, t: f64| 2.0 + (s + t).sin()), 1.0, 1.0)?,
        _ => return Err(param!("unknown kappa preset {spec:?} (one, const:c, two-plus-sin)")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_presets() {
        assert_eq!(sigma("linear").unwrap().eval(-2.0), -2.0);
        assert_eq!(sigma("const:0.5").unwrap().eval(7.0), 0.5);
        assert_eq!(sigma("sqrt").unwrap().eval(-1.0), 0.0);
        let h = sigma("holder:0.8:2").unwrap();
        assert!((h.eval(4.0) - 4f64.powf(0.8)).abs() < 1e-12);
        assert!(h.gamma() == 0.8);
        assert!(sigma("cubic").is_err());
        assert!(sigma("const:x").is_err());
    }

    #[test]
    fn phi_presets() {
        let p = phi("bump:[-1,1]").unwrap();
        assert!((p.mass() - 1.0).abs() < 1e-10);
        assert_eq!(p.support(), (-1.0, 1.0));
        let q = phi("bump:[0,2]:3").unwrap();
        assert_eq!(q.eval(1.0), 3.0);
        assert_eq!(phi("zero").unwrap().eval(0.0), 0.0);
        assert!(phi("bump:[1,0]").is_err());
        assert!(phi("bump:1,2").is_err());
    }

    #[test]
    fn other_presets() {
        assert!(catalyst("zero").unwrap().is_none());
        assert_eq!(catalyst("ramp:2").unwrap().unwrap()(0.5), 1.0);
        assert!(kappa("two-plus-sin").is_ok());
        assert!(kappa("const:0").is_err());
        assert!(kappa("exp").is_err());
    }
}
