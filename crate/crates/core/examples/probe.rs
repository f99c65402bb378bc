use lpres::lpres::{preset_gamma, preset_grigorchuk};
use lpres::nq::nilpotent_quotient;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str()).unwrap_or("grig");
    let class: u32 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(8);
    let dwyer = args.get(3).map(|s| s == "dwyer").unwrap_or(false);
    let lp = match which {
        "grig" => preset_grigorchuk(),
        d => preset_gamma(d.parse().unwrap()).unwrap(),
    };
    let t0 = Instant::now();
    if args.get(3).map(|s| s.as_str()) == Some("lowx") {
        let radius: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(2);
        let opts = lpres::lowx::LowIndexOptions { radius };
        let (count, normal) = lpres::lowx::low_index_counts(&lp, class as usize, &opts).unwrap();
        println!(
            "index {}: {} subgroups, {} normal, radius {}, {:.2?}",
            class,
            count,
            normal,
            radius,
            t0.elapsed()
        );
        return;
    }
    if args.get(3).map(|s| s.as_str()) == Some("dsub") {
        // Compare truncated subgroup abelianizations against the exact path.
        let table = lpres::rs::derived_subgroup_table(&lp, 1 << 20).unwrap();
        println!("derived subgroup index {}", table.index());
        for radius in 0..=(class as usize) {
            let fp = lp.truncate(radius);
            let (sub, _) = lpres::rs::finite_subgroup_presentation(&fp, &table).unwrap();
            let slp = lpres::lpres::LPresentation::from_finite(&sub);
            let ab = lpres::nq::abelian_quotient(&slp).unwrap();
            println!(
                "  radius {}: {:?} free {} ({:.2?})",
                radius,
                ab.torsion,
                ab.free_rank,
                t0.elapsed()
            );
        }
        let exact = lpres::rs::exact_subgroup_presentation(&lp, &table).unwrap();
        let ab = lpres::nq::abelian_quotient(&exact).unwrap();
        println!("  exact: {:?} free {}", ab.torsion, ab.free_rank);
        return;
    }
    if args.get(3).map(|s| s.as_str()) == Some("dcheck") {
        // Certify [G : G″] using only coset enumeration: G″ is generated by
        // commutators of Schreier generators of G′ together with conjugates.
        let table = lpres::rs::derived_subgroup_table(&lp, 1 << 20).unwrap();
        let sys = lpres::rs::SchreierSystem::new(table.clone());
        let gens: Vec<_> = sys.generators().to_vec();
        println!("derived subgroup index {}, {} schreier gens", table.index(), gens.len());
        let mut kgens = Vec::new();
        for i in 0..gens.len() {
            for j in 0..gens.len() {
                if i == j {
                    continue;
                }
                let c = lpres::word::FreeWord::commutator(&gens[i], &gens[j]);
                if c.is_identity() {
                    continue;
                }
                kgens.push(c.clone());
                for k in 0..gens.len() {
                    kgens.push(c.conjugate(&gens[k]));
                }
                for g in 0..lp.rank() {
                    let x = lpres::word::FreeWord::generator(g);
                    kgens.push(c.conjugate(&x));
                    kgens.push(c.conjugate(&x.invert()));
                }
            }
        }
        println!("{} generators for the second derived subgroup", kgens.len());
        let opts = lpres::lcenum::IndexOptions::default();
        match lpres::lcenum::certified_index(&lp, &kgens, &opts).unwrap() {
            lpres::lcenum::IndexOutcome::Certified(c) => {
                println!(
                    "certified [G : K] = {} (radius {}), normal: {} in {:.2?}",
                    c.index,
                    c.radius,
                    c.table.is_normal(),
                    t0.elapsed()
                );
            }
            lpres::lcenum::IndexOutcome::Unresolved => println!("unresolved"),
        }
        return;
    }
    if args.get(3).map(|s| s.as_str()) == Some("derived") {
        let s = lpres::rs::derived_series(&lp, class as usize, 1 << 20).unwrap();
        println!("derived depth {} in {:.2?}", class, t0.elapsed());
        for (i, sec) in s.sections.iter().enumerate() {
            println!("  level {}: {:?} free {}", i, sec.torsion, sec.free_rank);
        }
        println!("  cumulative indices: {:?}", s.indices);
        return;
    }
    if dwyer {
        let entries = lpres::dwyer::dwyer_series(&lp, class as usize).unwrap();
        println!("{} entries in {:.2?}", entries.len(), t0.elapsed());
        for (i, e) in entries.iter().enumerate() {
            println!("  {}: {:?} free {}", i + 1, e.torsion, e.free_rank);
        }
        return;
    }
    let q = nilpotent_quotient(&lp, class).unwrap();
    println!("class {} in {:.2?}", q.class, t0.elapsed());
    for (k, s) in q.sections.iter().enumerate() {
        println!("  γ{}/γ{}: {:?} free {}", k + 1, k + 2, s.torsion, s.free_rank);
    }
    println!("ngens {} stabilized {}", q.pc.ngens(), q.stabilized);
}
