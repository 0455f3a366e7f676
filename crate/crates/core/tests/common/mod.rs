#![allow(dead_code)]

use fpslope::analyzer::{analyze, Analysis, InstantLabel, Options};
use fpslope::domain::{Domain, IntervalDomain, SlopeDomain};
use fpslope::frontend::{compile, Model};
use fpslope::ir::{Lit, Program};
use fpslope::oracle::{sample_in, Machine};
use fpslope::slope::{absorption, fps_sub, fps_widen, phi, Absorption, FpsValue, IndRegistry, Origin};
use fpslope::{Interval, Precision, PrecisionProfile, Thresholds};
use rand::Rng;

pub const FILTER: &str = include_str!("../../../../docs/filter.fps");
pub const NEWTON: &str = include_str!("../../../../docs/newton.fps");
pub const SUMS: &str = include_str!("../../../../docs/sums.fps");
pub const ILLCOND: &str = include_str!("../../../../docs/illcond.fps");

pub fn load(text: &str) -> (Model, Program) {
    compile(text).expect("model parses")
}

pub fn lit(s: &str) -> Lit {
    Lit::parse(s).unwrap()
}

/// Profiles whose arithmetic the oracle executes.
pub const EXECUTABLE: [Precision; 3] = [Precision::Single, Precision::Double, Precision::DoubleRounding];

/// `b (1 + [-rel, rel])`.
pub fn relax(b: Interval, rel: f64) -> Interval {
    b.inflate(rel).unwrap()
}

/// A random value of the format: mostly moderate magnitudes, sometimes
/// tiny, huge or zero.
pub fn format_value(rng: &mut impl Rng, p: &PrecisionProfile) -> f64 {
    let single = p.precision == Precision::Single;
    let e = match rng.gen_range(0..20) {
        0 => return 0.0,
        1 => rng.gen_range(if single { -149..-120 } else { -1074..-1000 }),
        2 => rng.gen_range(if single { 100..128 } else { 1000..1024 }),
        _ => rng.gen_range(-20..20),
    };
    let m: f64 = rng.gen_range(1.0..2.0);
    let s = if rng.gen() { 1.0 } else { -1.0 };
    let x = s * m * 2f64.powi(e);
    let x = if x.is_finite() { x } else { s * f64::MAX };
    p.round_nearest(x).clamp(-p.big_sigma().down(), p.big_sigma().down())
}

pub fn format_interval(rng: &mut impl Rng, p: &PrecisionProfile) -> Interval {
    let a = format_value(rng, p);
    let b = if rng.gen_range(0..3) == 0 {
        // narrow: a few ulps wide
        let mut b = a;
        for _ in 0..rng.gen_range(0..8) {
            b = p.successor(b);
        }
        b
    } else {
        format_value(rng, p)
    };
    Interval::new(a.min(b), a.max(b))
}

/// Lattice laws of intervals on one triple.
pub fn lattice_laws(a: Interval, b: Interval, c: Interval, t: &Thresholds) -> Result<(), String> {
    let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(format!("{what} fails on {a}, {b}, {c}")) };
    check(a.join(&b) == b.join(&a), "join commutes")?;
    check(a.meet(&b) == b.meet(&a), "meet commutes")?;
    check(a.join(&b).join(&c) == a.join(&b.join(&c)), "join associates")?;
    check(a.meet(&b).meet(&c) == a.meet(&b.meet(&c)), "meet associates")?;
    check(a.join(&a) == a && a.meet(&a) == a, "idempotence")?;
    check(a.join(&a.meet(&b)) == a && a.meet(&a.join(&b)) == a, "absorption")?;
    check(a.leq(&b) == (a.join(&b) == b), "order agrees with join")?;
    check(a.leq(&b) == (a.meet(&b) == a), "order agrees with meet")?;
    check(a.leq(&a.join(&b)) && b.leq(&a.join(&b)), "join is an upper bound")?;
    check(a.meet(&b).leq(&a) && a.meet(&b).leq(&b), "meet is a lower bound")?;
    check(Interval::BOTTOM.leq(&a) && a.leq(&Interval::TOP), "bottom and top")?;
    check(a.join(&Interval::BOTTOM) == a && a.meet(&Interval::TOP) == a, "units")?;
    check(a.join(&b).leq(&a.widen(&b, t)), "widening is an upper bound")?;
    if a.leq(&b) && b.leq(&c) {
        check(a.leq(&c), "order is transitive")?;
    }
    Ok(())
}

pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
}

pub const OPS: [Op; 5] = [Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Sqrt];

impl Op {
    fn abstract_<D: Domain>(&self, d: &D, g: &D::Value, h: &D::Value, reg: &IndRegistry) -> Option<D::Value> {
        match self {
            Op::Add => d.add(g, h, reg),
            Op::Sub => d.sub(g, h, reg),
            Op::Mul => d.mul(g, h, reg),
            Op::Div => d.div(g, h, reg),
            Op::Sqrt => d.sqrt(g, reg),
        }
        .ok()
    }

    fn concrete(&self, m: Machine, x: f64, y: f64) -> f64 {
        match self {
            Op::Add => m.add(x, y),
            Op::Sub => m.sub(x, y),
            Op::Mul => m.mul(x, y),
            Op::Div => m.div(x, y),
            Op::Sqrt => m.sqrt(x),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "/",
            Op::Sqrt => "sqrt",
        }
    }
}

/// Operands over two independent variables `x` and `y`: the variables
/// themselves, a scaled copy of `x`, a sum of both or a constant.
fn operand<D: Domain>(
    d: &D,
    m: Machine,
    reg: &IndRegistry,
    kind: u32,
    c: f64,
    x: f64,
    y: f64,
) -> Option<(D::Value, f64)> {
    let (vx, vy) = (d.independent(reg, 0), d.independent(reg, 1));
    let k = d.constant(&Lit::exact(c));
    Some(match kind {
        0 => (vx, x),
        1 => (vy, y),
        2 => (d.mul(&vx, &k, reg).ok()?, m.mul(x, c)),
        3 => (d.add(&vx, &vy, reg).ok()?, m.add(x, y)),
        _ => (k, c),
    })
}

/// One random case of the per-operation soundness property: the concrete
/// result of every operation lies in its abstract result at the concrete
/// point.
pub fn op_soundness_case<D: Domain>(d: &D, rng: &mut impl Rng) -> Result<usize, String> {
    let p = *d.profile();
    let m = Machine::for_profile(&p).map_err(|e| e.to_string())?;
    let mut reg = IndRegistry::new();
    let rx = format_interval(rng, &p);
    let ry = format_interval(rng, &p);
    reg.register(Origin::named("x"), rx);
    reg.register(Origin::named("y"), ry);
    let x = sample_in(rng, rx, &p);
    let y = sample_in(rng, ry, &p);
    let point = [x, y];
    let c = format_value(rng, &p);
    let (gk, hk) = (rng.gen_range(0..5), rng.gen_range(0..5));
    let Some((g, gv)) = operand(d, m, &reg, gk, c, x, y) else {
        return Ok(0);
    };
    let Some((h, hv)) = operand(d, m, &reg, hk, c, x, y) else {
        return Ok(0);
    };
    for (v, val, what) in [(&g, gv, "left operand"), (&h, hv, "right operand")] {
        if !d.contains(v, &reg, val, &point) {
            return Err(format!("{} {what} {val:e} escapes {v:?} over x in {rx}, y in {ry}", d.name()));
        }
    }
    // an infinite operand means an overflow was already reported; set
    // semantics then no longer covers 0 * inf
    if !gv.is_finite() || !hv.is_finite() {
        return Ok(0);
    }
    let mut checked = 0;
    for op in OPS {
        let Some(r) = op.abstract_(d, &g, &h, &reg) else {
            continue;
        };
        let z = op.concrete(m, gv, hv);
        checked += 1;
        if !d.contains(&r, &reg, z, &point) {
            return Err(format!(
                "{} {}: {gv:e} {} {hv:e} = {z:e} escapes {} (x = {x:e} in {rx}, y = {y:e} in {ry}, operands {g:?} {h:?})",
                d.name(),
                p.precision,
                op.name(),
                d.enclosure_at(&r, &reg, &point),
            ));
        }
    }
    Ok(checked)
}

/// Soundness of every domain over one profile.
pub fn all_domains_case(p: Precision, rng: &mut impl Rng) -> Result<usize, String> {
    let prof = PrecisionProfile::new(p);
    Ok(op_soundness_case(&SlopeDomain::fps(prof), rng)?
        + op_soundness_case(&IntervalDomain::new(prof), rng)?
        + op_soundness_case(&IntervalDomain::error_model(prof), rng)?)
}

/// Counts the strict increases of a widening chain driven by `seq` and
/// checks them against the bound: each bound of each component moves at
/// most once per threshold.
pub fn widening_chain(seq: &[(Interval, Interval, Interval)], t: &Thresholds) -> Result<usize, String> {
    let fps = |(m, a, b): (Interval, Interval, Interval)| FpsValue::new(m, vec![a, b]);
    let mut w = fps(seq[0]);
    let mut iv = seq[0].0;
    let (mut fps_steps, mut iv_steps) = (0, 0);
    for &s in &seq[1..] {
        let next = fps_widen(&w, &fps(s), t);
        if next != w {
            fps_steps += 1;
        }
        w = next;
        let next = iv.widen(&iv.join(&s.0), t);
        if next != iv {
            iv_steps += 1;
        }
        iv = next;
    }
    let bound = 2 * t.len();
    if iv_steps > bound {
        return Err(format!("interval chain rose {iv_steps} times, bound {bound}"));
    }
    if fps_steps > 3 * bound {
        return Err(format!("slope chain rose {fps_steps} times, bound {}", 3 * bound));
    }
    Ok(fps_steps.max(iv_steps))
}

/// `(a + b) + c` and `a + (b + c)` differ in binary32, and the analysis of
/// each order contains its own result but not the other's.
pub fn non_associativity() -> Result<(f64, f64), String> {
    let m = Machine::single();
    let (a, b, c) = (1e8, -1e8, 1.0);
    let left = m.add(m.add(a, b), c);
    let right = m.add(a, m.add(b, c));
    if left == right {
        return Err(format!("no witness: both orders give {left}"));
    }
    let eval = |text: &str| {
        let (_, p) = load(text);
        let d = SlopeDomain::fps(PrecisionProfile::single());
        let an = analyze(&d, &p, &Options::default()).unwrap();
        an.interval_at(&d, InstantLabel::Step(0), p.lookup("s").unwrap())
    };
    let head = "a = constant(1e8)\nb = constant(-1e8)\nc = constant(1)\n";
    let il = eval(&format!("{head}t = sum(a, b)\ns = sum(t, c)\no = output(s)\nsimulate precision=single\n"));
    let ir = eval(&format!("{head}t = sum(b, c)\ns = sum(a, t)\no = output(s)\nsimulate precision=single\n"));
    if !il.contains(left) || !ir.contains(right) {
        return Err(format!("enclosures {il} / {ir} miss {left} / {right}"));
    }
    if il.contains(right) {
        return Err(format!("left-first enclosure {il} cannot tell the orders apart"));
    }
    Ok((left, right))
}

/// `rnd(1e4 - 1e-4) = 1e4` in binary32, and the total absorption rule fires
/// for the same operands.
pub fn absorption_rule() -> Result<(), String> {
    let p = PrecisionProfile::single();
    let m = Machine::single();
    let big = m.lit(&lit("1e4"));
    let small = m.lit(&lit("1e-4"));
    if m.sub(big, small) != big {
        return Err(format!("rnd(1e4 - 1e-4) = {}", m.sub(big, small)));
    }
    let reg = IndRegistry::new();
    let (g, h) = (FpsValue::point(small), FpsValue::point(big));
    if absorption(&g, &h, &reg, &p) != Absorption::Total {
        return Err("total absorption rule does not fire".into());
    }
    let r = fps_sub(&h, &g, &reg, &p).map_err(|e| e.to_string())?;
    // the absorbed operand leaves only the rounding of 1e4 itself
    let expect = relax(Interval::point(big), p.u());
    if !r.m().leq(&expect) || !r.m().contains(big) {
        return Err(format!("1e4 - 1e-4 gives {:?}", r));
    }
    Ok(())
}

/// Zero and overflow normalisation exactly at `sigma/2` and `Sigma`,
/// against what binary32 and binary64 rounding do there.
pub fn phi_boundaries() -> Result<(), String> {
    let reg = IndRegistry::new();
    let c = |lo: f64, hi: f64| FpsValue::constant(Interval::new(lo, hi));
    let expect = |ok: bool, what: &str| if ok { Ok(()) } else { Err(what.to_string()) };
    // binary32
    let p = PrecisionProfile::single();
    let half = 2f64.powi(-150);
    let max = f32::MAX as f64;
    expect(half as f32 == 0.0 && half.next_up() as f32 > 0.0, "binary32 rounds sigma/2 to zero, just above it up")?;
    expect(phi(&c(-half, half), &reg, &p) == FpsValue::zero(), "[-sigma/2, sigma/2] flushes to zero")?;
    let just_above = phi(&c(0.0, half.next_up()), &reg, &p);
    expect(just_above != FpsValue::zero() && just_above.m().contains(0.0), "partial flush just above sigma/2")?;
    expect(phi(&c(max, max), &reg, &p) == c(max, max), "Sigma itself is kept")?;
    expect(phi(&c(max.next_up(), 2.0 * max), &reg, &p).is_pos_overflow(), "]Sigma, +inf] overflows")?;
    expect(phi(&c(-2.0 * max, -max.next_up()), &reg, &p).is_neg_overflow(), "[-inf, -Sigma[ overflows")?;
    expect(phi(&c(1.0, max.next_up()), &reg, &p).m().hi() == f64::INFINITY, "partial overflow joins +inf")?;
    let ulp = 2f64.powi(104);
    expect(((max + ulp / 2.0) as f32).is_infinite() && (max + ulp / 4.0) as f32 == f32::MAX, "binary32 overflow threshold")?;
    // binary64: sigma/2 is not a binary64 number, the smallest subnormal is above it
    let p = PrecisionProfile::double();
    let sigma = f64::from_bits(1);
    expect(phi(&c(0.0, 0.0), &reg, &p) == FpsValue::zero(), "zero stays zero")?;
    expect(phi(&c(-sigma, sigma), &reg, &p) != FpsValue::zero(), "[-sigma, sigma] is only a partial flush")?;
    expect(phi(&c(f64::MAX, f64::MAX), &reg, &p) == c(f64::MAX, f64::MAX), "binary64 Sigma is kept")?;
    expect(phi(&c(f64::INFINITY, f64::INFINITY), &reg, &p).is_pos_overflow(), "binary64 +inf overflows")?;
    Ok(())
}

/// Analysis of `prog` under the fps domain at its own precision.
pub fn fps_analysis(prog: &Program, opts: &Options) -> (SlopeDomain, Analysis<FpsValue>) {
    let d = SlopeDomain::fps(PrecisionProfile::new(prog.precision));
    let a = analyze(&d, prog, opts).expect("analysis runs");
    (d, a)
}

pub fn no_fixpoint() -> Options {
    Options {
        fixpoint: false,
        ..Options::default()
    }
}

type Big = dashu_float::FBig<dashu_float::round::mode::HalfEven, 2>;

fn big(x: f64) -> Big {
    Big::try_from(x).unwrap().with_precision(64).value()
}

fn encloses(i: Interval, z: &Big) -> bool {
    !i.is_bottom()
        && (i.lo() == f64::NEG_INFINITY || Big::try_from(i.lo()).unwrap() <= *z)
        && (i.hi() == f64::INFINITY || *z <= Big::try_from(i.hi()).unwrap())
}

/// The per-operation property for the extended format on binary64
/// operands. Results are computed exactly and rounded to a 64-bit
/// significand; binary64 operands cannot leave its exponent range.
pub fn extended_case<D: Domain>(d: &D, rng: &mut impl Rng) -> Result<usize, String> {
    let p = *d.profile();
    let mut reg = IndRegistry::new();
    let rx = format_interval(rng, &p);
    let ry = format_interval(rng, &p);
    reg.register(Origin::named("x"), rx);
    reg.register(Origin::named("y"), ry);
    let x = sample_in(rng, rx, &p);
    let y = sample_in(rng, ry, &p);
    let point = [x, y];
    let c = format_value(rng, &p);
    let pick = |k: u32| match k {
        0 => (d.independent(&reg, 0), x),
        1 => (d.independent(&reg, 1), y),
        _ => (d.constant(&Lit::exact(c)), c),
    };
    let ((g, gv), (h, hv)) = (pick(rng.gen_range(0..3)), pick(rng.gen_range(0..3)));
    let (a, b) = (big(gv), big(hv));
    let mut checked = 0;
    for op in OPS {
        let z = match op {
            Op::Add => &a + &b,
            Op::Sub => &a - &b,
            Op::Mul => &a * &b,
            Op::Div if hv != 0.0 => &a / &b,
            Op::Sqrt if gv >= 0.0 => a.sqrt(),
            _ => continue,
        };
        let Some(r) = op.abstract_(d, &g, &h, &reg) else {
            continue;
        };
        checked += 1;
        let e = d.enclosure_at(&r, &reg, &point);
        if !encloses(e, &z) {
            return Err(format!("{} extended: {gv:e} {} {hv:e} = {z} escapes {e}", d.name(), op.name()));
        }
    }
    Ok(checked)
}

pub fn all_domains_extended_case(rng: &mut impl Rng) -> Result<usize, String> {
    let prof = PrecisionProfile::new(Precision::Extended);
    Ok(extended_case(&SlopeDomain::fps(prof), rng)?
        + extended_case(&IntervalDomain::new(prof), rng)?
        + extended_case(&IntervalDomain::error_model(prof), rng)?)
}
