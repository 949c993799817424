//! Acceptance suite: one line per criterion, non-zero exit on any failure.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netindex::error::InstanceError;
use netindex::galois::{make_field, FieldSpec, Matrix};
use netindex::index::{compute_mu, validate_index_instance, IndexInstance, RawClient, RawIndexInstance, Wants};
use netindex::indexcode::{
    brute_force_decodability, rate_report, table_rate_report, validate_index_code, verify_decoders, IndexEncoder,
    LinearIndexCode, RateReport,
};
use netindex::instances::{
    build_non_pappus, builtin_matroid, butterfly, butterfly_code, check_multilinear_representation, dfz_network,
    dfz_table_code, m_network, m_network_routing_code, non_pappus_functions, non_pappus_vector_code, NonPappusLines,
    DFZ_CITATION,
};
use netindex::netcode::{linear_to_table, validate_linear_code, validate_table_code, LinearNetworkCode};
use netindex::network::NetworkInstance;
use netindex::reduction::{lift_linear_code, lift_table_code, lower_index_code, reduce_instance};
use netindex::solver::{
    generate_random_solvable_network, min_linear_index_length, search_linear_index_code,
    search_matroid_representation, search_scalar_network_code, Outcome, RandomNetworkParams, SearchConfig,
};

enum Verdict {
    Pass(String),
    Fail(String),
    Skipped(String),
}

fn gf(p: u32) -> FieldSpec {
    make_field(p, 1, None).unwrap()
}

/// Every accepted code must meet the lower bound: `ℓ >= n μ`.
#[derive(Default)]
struct BoundLedger {
    checked: usize,
    broken: Vec<String>,
}

impl BoundLedger {
    fn record(&mut self, what: &str, report: &RateReport) {
        self.checked += 1;
        if report.l < report.n * report.mu {
            self.broken.push(format!("{what}: l = {}, n = {}, mu = {}", report.l, report.n, report.mu));
        }
    }
}

fn random_suite() -> Vec<(u64, NetworkInstance, LinearNetworkCode)> {
    (0..100u64)
        .map(|seed| {
            let field = gf(if seed % 2 == 0 { 2 } else { 3 });
            let n = 1 + (seed as usize / 2) % 2;
            let (net, code) = generate_random_solvable_network(seed, &RandomNetworkParams::default(), &field, n).unwrap();
            (seed, net, code)
        })
        .collect()
}

fn criterion_1(suite: &[(u64, NetworkInstance, LinearNetworkCode)], generation_secs: f64, bound: &mut BoundLedger) -> Verdict {
    let start = Instant::now();
    for (seed, net, code) in suite {
        let fail = |why: String| Verdict::Fail(format!("seed {seed}: {why}"));
        if net.m() > 12 {
            return fail(format!("{} edges", net.m()));
        }
        let (inst, _) = reduce_instance(net);
        let lifted = match lift_linear_code(net, code) {
            Ok(c) => c,
            Err(e) => return fail(format!("lift: {e}")),
        };
        let report = match rate_report(&lifted, &inst) {
            Ok(r) => r,
            Err(e) => return fail(format!("lifted code invalid: {e}")),
        };
        bound.record("lifted random code", &report);
        if report.mu != net.m() || !report.achieves_bound {
            return fail(format!("rate {} with mu {} and m {}", report.rate, report.mu, net.m()));
        }
        let lowered = match lower_index_code(net, &lifted) {
            Ok(c) => c,
            Err(e) => return fail(format!("lower: {e}")),
        };
        if let Err(e) = validate_linear_code(net, &lowered) {
            return fail(format!("lowered code invalid: {e}"));
        }
        if let Some(i) = net.interior().find(|&i| lowered.coeff(i) != code.coeff(i)) {
            return fail(format!("edge {} changed", net.edge_id(i)));
        }
    }
    let secs = generation_secs + start.elapsed().as_secs_f64();
    if secs >= 30.0 {
        return Verdict::Fail(format!("round trips correct but took {secs:.1} s"));
    }
    Verdict::Pass(format!("{} networks generated, lifted, validated, lowered and compared in {secs:.3} s", suite.len()))
}

fn criterion_2(suite: &[(u64, NetworkInstance, LinearNetworkCode)]) -> Verdict {
    let mut nets: Vec<(String, NetworkInstance)> =
        suite.iter().map(|(s, n, _)| (format!("random seed {s}"), n.clone())).collect();
    nets.push(("m-network".into(), m_network().unwrap()));
    nets.push(("non-pappus".into(), build_non_pappus().unwrap()));
    if let Ok(net) = dfz_network() {
        nets.push(("dfz-n3".into(), net));
    }
    for (name, net) in &nets {
        let (inst, _) = reduce_instance(net);
        let mu = compute_mu(&inst);
        if mu != net.m() {
            return Verdict::Fail(format!("{name}: mu = {mu}, |E| = {}", net.m()));
        }
    }
    Verdict::Pass(format!("mu of the reduced instance equals the edge count on {} networks", nets.len()))
}

fn criterion_3(bound: &mut BoundLedger) -> Verdict {
    let start = Instant::now();
    let inst = match butterfly() {
        Ok(i) => i,
        Err(e) => return Verdict::Fail(format!("instance: {e}")),
    };
    let code = butterfly_code();
    if let Err(e) = validate_index_code(&code, &inst) {
        return Verdict::Fail(format!("two-transmission code rejected: {e}"));
    }
    if let Err(e) = brute_force_decodability(&code, &inst) {
        return Verdict::Fail(format!("two-transmission code fails exhaustive check: {e}"));
    }
    bound.record("butterfly code", &rate_report(&code, &inst).unwrap());
    let cfg = SearchConfig::default();
    let one = search_linear_index_code(&inst, &gf(2), 1, 1, &cfg).unwrap();
    if one.outcome != Outcome::Exhausted {
        return Verdict::Fail(format!("l = 1 gave {:?}", one.outcome));
    }
    let min = min_linear_index_length(&inst, &gf(2), 1, &cfg).unwrap();
    let Some(report) = min.report else { return Verdict::Fail(format!("min-length gave {:?}", min.outcome)) };
    bound.record("butterfly min-length code", &report);
    if report.l != 2 {
        return Verdict::Fail(format!("min-length returned l = {}", report.l));
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 1.0 {
        return Verdict::Fail(format!("correct but took {secs:.2} s"));
    }
    Verdict::Pass(format!("code validates, l = 1 exhausted in {} nodes, min length 2 ({secs:.3} s)", one.nodes))
}

fn criterion_4() -> Verdict {
    let spec = builtin_matroid("non-pappus").unwrap();
    let mut notes = Vec::new();
    for (p, d) in [(2, 1), (3, 1), (2, 2), (5, 1)] {
        let field = make_field(p, d, None).unwrap();
        let start = Instant::now();
        let first = search_matroid_representation(&spec, &field, &SearchConfig::default()).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let second = search_matroid_representation(&spec, &field, &SearchConfig::default()).unwrap();
        if first.outcome != Outcome::Exhausted {
            return Verdict::Fail(format!("GF({}) gave {:?}", field.order(), first.outcome));
        }
        if first.nodes != second.nodes {
            return Verdict::Fail(format!("GF({}) node counts {} vs {}", field.order(), first.nodes, second.nodes));
        }
        if secs >= 300.0 {
            return Verdict::Fail(format!("GF({}) took {secs:.0} s", field.order()));
        }
        notes.push(format!("GF({}) {} nodes", field.order(), first.nodes));
    }
    Verdict::Pass(format!("exhausted with reproducible node counts: {}", notes.join(", ")))
}

fn criterion_5(bound: &mut BoundLedger) -> Verdict {
    let start = Instant::now();
    let report = check_multilinear_representation(&non_pappus_functions(), &NonPappusLines::standard());
    if !report.holds() {
        return Verdict::Fail(format!("rank violations: {:?}", report.violations));
    }
    if report.dependent_triples + report.independent_triples != 84 {
        return Verdict::Fail("not all 84 triples checked".into());
    }
    let net = build_non_pappus().unwrap();
    let code = non_pappus_vector_code(&net).unwrap();
    if let Err(e) = validate_linear_code(&net, &code) {
        return Verdict::Fail(format!("network code: {e}"));
    }
    let (inst, _) = reduce_instance(&net);
    let lifted = lift_linear_code(&net, &code).unwrap();
    let rate = match rate_report(&lifted, &inst) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(format!("lifted code: {e}")),
    };
    bound.record("non-pappus lifted code", &rate);
    if !rate.achieves_bound {
        return Verdict::Fail(format!("rate {} against mu {}", rate.rate, rate.mu));
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        return Verdict::Fail(format!("correct but took {secs:.1} s"));
    }
    Verdict::Pass(format!(
        "84 triples and 36 pairs ranked, (2,3) code valid on {} edges, lift rate {} = mu ({secs:.2} s)",
        net.m(),
        rate.rate
    ))
}

fn criterion_6(bound: &mut BoundLedger) -> Verdict {
    let start = Instant::now();
    let net = m_network().unwrap();
    let mut nodes = Vec::new();
    for p in [2, 3] {
        let r = search_scalar_network_code(&net, &gf(p), &SearchConfig::default()).unwrap();
        if r.outcome != Outcome::Exhausted {
            return Verdict::Fail(format!("scalar search over GF({p}) gave {:?}", r.outcome));
        }
        nodes.push(format!("GF({p}) {} nodes", r.nodes));
    }
    let code = m_network_routing_code(&net).unwrap();
    if let Err(e) = validate_linear_code(&net, &code) {
        return Verdict::Fail(format!("routing code: {e}"));
    }
    let (inst, _) = reduce_instance(&net);
    let lifted = lift_linear_code(&net, &code).unwrap();
    let rate = match rate_report(&lifted, &inst) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(format!("lifted routing code: {e}")),
    };
    bound.record("m-network lifted code", &rate);
    if !rate.achieves_bound {
        return Verdict::Fail(format!("rate {} against mu {}", rate.rate, rate.mu));
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        return Verdict::Fail(format!("correct but took {secs:.1} s"));
    }
    Verdict::Pass(format!("no scalar code ({}), n = 2 routing code lifts to rate {} = mu", nodes.join(", "), rate.rate))
}

fn random_index_pair(rng: &mut impl Rng) -> (IndexInstance, LinearIndexCode) {
    loop {
        let p = if rng.gen_bool(0.5) { 2 } else { 3 };
        let n = rng.gen_range(1..=2);
        let k = rng.gen_range(2..=5);
        if (p as f64).powi((n * k) as i32) > 4096.0 {
            continue;
        }
        let clients = (0..rng.gen_range(1..=5))
            .map(|_| {
                let wants = rng.gen_range(1..=k);
                let has = (1..=k).filter(|&j| j != wants && rng.gen_bool(0.5)).collect();
                RawClient { wants: Wants::One(wants), has }
            })
            .collect();
        let inst = validate_index_instance(&RawIndexInstance { description: None, k, names: None, clients }).unwrap();
        let field = gf(p);
        let l = rng.gen_range(1..=n * k);
        // sparse columns make both outcomes common
        let data = (0..n * k * l).map(|_| if rng.gen_bool(0.6) { 0 } else { rng.gen_range(1..p as u8) }).collect();
        let g = Matrix::from_vec(&field, n * k, l, data).unwrap();
        return (inst, LinearIndexCode::new(n, k, l, g).unwrap());
    }
}

fn criterion_7(suite: &[(u64, NetworkInstance, LinearNetworkCode)], bound: &mut BoundLedger) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut valid, mut invalid) = (0, 0);
    for pair in 0..500 {
        let (inst, code) = random_index_pair(&mut rng);
        let rank_test = validate_index_code(&code, &inst).is_ok();
        let exhaustive = brute_force_decodability(&code, &inst).is_ok();
        if rank_test != exhaustive {
            return Verdict::Fail(format!("pair {pair}: rank test {rank_test}, exhaustive {exhaustive}"));
        }
        if rank_test {
            valid += 1;
            bound.record("random index code", &rate_report(&code, &inst).unwrap());
        } else {
            invalid += 1;
        }
    }
    // linear and table network validators on the random suite and on
    // perturbed copies
    let (mut agree, mut rejected) = (0, 0);
    for (seed, net, code) in suite {
        let mut candidates = vec![code.clone()];
        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
        for _ in 0..3 {
            let mut coeffs = code.coeffs().to_vec();
            let i = rng.gen_range(0..net.m());
            let c = &mut coeffs[i];
            let (r, col) = (rng.gen_range(0..c.rows()), rng.gen_range(0..c.cols()));
            let q = code.field().order() as u8;
            c.set(r, col, (c.get(r, col) + rng.gen_range(1..q)) % q);
            candidates.push(LinearNetworkCode::new(code.field().clone(), code.n(), code.k(), coeffs).unwrap());
        }
        for cand in candidates {
            let Ok(table) = linear_to_table(&cand) else { continue };
            let linear_ok = validate_linear_code(net, &cand).is_ok();
            let table_ok = validate_table_code(net, &table).is_ok();
            if linear_ok != table_ok {
                return Verdict::Fail(format!("seed {seed}: linear {linear_ok}, table {table_ok}"));
            }
            agree += 1;
            rejected += usize::from(!linear_ok);
        }
    }
    Verdict::Pass(format!(
        "500 index pairs agree ({valid} decodable, {invalid} not); {agree} network codes agree ({rejected} rejected)"
    ))
}

fn criterion_9(bound: &mut BoundLedger) -> Verdict {
    let net = match dfz_network() {
        Ok(n) => n,
        Err(InstanceError::MissingData { file, .. }) => {
            return Verdict::Skipped(format!("{file} not supplied; table code from {DFZ_CITATION}"))
        }
        Err(e) => return Verdict::Fail(format!("network: {e}")),
    };
    let code = match dfz_table_code(&net) {
        Ok(c) => c,
        Err(InstanceError::MissingData { file, .. }) => {
            return Verdict::Skipped(format!("{file} not supplied; table code from {DFZ_CITATION}"))
        }
        Err(e) => return Verdict::Fail(format!("table code: {e}")),
    };
    if code.n() != 2 || code.q() != 4 {
        return Verdict::Fail(format!("expected a (2,4) code, got ({},{})", code.n(), code.q()));
    }
    let (inst, _) = reduce_instance(&net);
    let lifted = match lift_table_code(&net, &code) {
        Ok(c) => c,
        Err(e) => return Verdict::Fail(format!("lift: {e}")),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let width = lifted.n() * lifted.k();
    let inputs: Vec<Vec<u8>> =
        (0..1000).map(|_| (0..width).map(|_| rng.gen_range(0..lifted.q() as u8)).collect()).collect();
    if let Err(e) = verify_decoders(&lifted, &inst, inputs.iter().map(Vec::as_slice)) {
        return Verdict::Fail(format!("decoding: {e}"));
    }
    let rate = table_rate_report(&lifted, &inst).unwrap();
    bound.record("dfz lifted code", &rate);
    if !rate.achieves_bound {
        return Verdict::Fail(format!("rate {} against mu {}", rate.rate, rate.mu));
    }
    Verdict::Pass(format!("(2,4) lift decodes 1000 random inputs, rate {} = mu", rate.rate))
}

fn main() {
    let mut bound = BoundLedger::default();
    let start = Instant::now();
    let suite = random_suite();
    let generation_secs = start.elapsed().as_secs_f64();
    let mut results = vec![
        ("1 round trip on random solvable networks", criterion_1(&suite, generation_secs, &mut bound)),
        ("2 mu of reduced instance equals edge count", criterion_2(&suite)),
        ("3 butterfly index instance", criterion_3(&mut bound)),
        ("4 non-Pappus matroid has no representation", criterion_4()),
        ("5 non-Pappus (2,3) code", criterion_5(&mut bound)),
        ("6 M-network", criterion_6(&mut bound)),
        ("7 validator cross-checks", criterion_7(&suite, &mut bound)),
        ("9 DFZ non-linear code pipeline", criterion_9(&mut bound)),
    ];
    let lemma = if !bound.broken.is_empty() {
        Verdict::Fail(bound.broken.join("; "))
    } else if bound.checked == 0 {
        Verdict::Fail("no codes checked".into())
    } else {
        Verdict::Pass(format!("rate >= mu on all {} accepted codes", bound.checked))
    };
    results.insert(7, ("8 rate never below mu", lemma));
    let mut failed = 0;
    for (name, verdict) in &results {
        match verdict {
            Verdict::Pass(d) => println!("criterion {name}: PASS ({d})"),
            Verdict::Skipped(d) => println!("criterion {name}: SKIPPED ({d})"),
            Verdict::Fail(d) => {
                failed += 1;
                println!("criterion {name}: FAIL ({d})");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
