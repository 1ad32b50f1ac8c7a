//! Size identities of the expanded network.

use elrp::pten::PtenGraph;

/// Node, internal-arc and external-arc counts implied by the instance's
/// links, slot counts and maximum station sizes.
pub fn expected_counts(graph: &PtenGraph) -> (usize, usize, usize) {
    let inst = graph.instance();
    let c = inst.num_customers();
    let linked = |a: usize, b: usize| inst.link(a, b).is_some() as usize;
    let depot = inst.depot_site();
    let mut external: usize = (0..c)
        .map(|i| 2 * linked(depot, inst.customer_site(i)))
        .sum();
    for a in 0..c {
        for b in 0..c {
            if a != b {
                external += linked(inst.customer_site(a), inst.customer_site(b));
            }
        }
    }
    let mut dummies = 0;
    let mut internal = 0;
    for (i, s) in inst.stations().iter().enumerate() {
        let slots = inst.station_slots(i) as usize;
        let n = s.size_max as usize * slots;
        let site = inst.station_site(i);
        let per_dummy = 2 * linked(depot, site)
            + (0..c)
                .map(|k| 2 * linked(inst.customer_site(k), site))
                .sum::<usize>();
        dummies += n;
        internal += s.size_max as usize * slots.saturating_sub(1);
        external += n * per_dummy;
    }
    (2 + c + dummies, internal, external)
}
