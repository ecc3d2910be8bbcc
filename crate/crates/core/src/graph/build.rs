//! Graph construction from rating histories and weighting from embeddings.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::{node_label, resolve_node, Edge, Graph, IdMap, NodeId};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rating {
    pub user: NodeId,
    pub item: u32,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct RatingsTable {
    entries: Vec<Rating>,
    items: IdMap,
    num_users: usize,
}

impl RatingsTable {
    /// Builds a table from `(user, item label, rating)` triples.
    pub fn from_triples<'a>(
        num_users: usize,
        triples: impl IntoIterator<Item = (NodeId, &'a str, f64)>,
    ) -> Result<Self> {
        let mut items = IdMap::new();
        let mut entries = Vec::new();
        for (user, item, value) in triples {
            if user as usize >= num_users {
                return Err(Error::node_out_of_range(user, num_users));
            }
            if !value.is_finite() {
                return Err(Error::NonFinite);
            }
            entries.push(Rating {
                user,
                item: items.get_or_insert(item),
                value,
            });
        }
        Ok(RatingsTable {
            entries,
            items,
            num_users,
        })
    }

    pub fn entries(&self) -> &[Rating] {
        &self.entries
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|r| r.value)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn item_id(&self, label: &str) -> Option<u32> {
        self.items.resolve(label)
    }

    pub fn check_range(&self, lo: f64, hi: f64) -> Result<()> {
        match self.values().find(|v| !(lo..=hi).contains(v)) {
            Some(v) => Err(Error::InvalidParameter(format!(
                "rating {v} outside declared range [{lo}, {hi}]"
            ))),
            None => Ok(()),
        }
    }

    /// Min-max rescaling onto `[lo, hi]`. A constant table maps to the midpoint.
    pub fn normalized(&self, lo: f64, hi: f64) -> RatingsTable {
        let min = self.values().fold(f64::INFINITY, f64::min);
        let max = self.values().fold(f64::NEG_INFINITY, f64::max);
        let entries = self
            .entries
            .iter()
            .map(|r| {
                let value = if max > min {
                    lo + (r.value - min) / (max - min) * (hi - lo)
                } else {
                    (lo + hi) / 2.0
                };
                Rating { value, ..*r }
            })
            .collect();
        RatingsTable {
            entries,
            items: self.items.clone(),
            num_users: self.num_users,
        }
    }

    /// Distinct items rated by each user, sorted.
    fn item_sets(&self) -> Vec<Vec<u32>> {
        let mut sets = vec![Vec::new(); self.num_users];
        for r in &self.entries {
            sets[r.user as usize].push(r.item);
        }
        for s in &mut sets {
            s.sort_unstable();
            s.dedup();
        }
        sets
    }
}

pub fn load_ratings(path: impl AsRef<Path>, users: Option<&IdMap>) -> Result<RatingsTable> {
    read_ratings(File::open(path)?, users)
}

/// Parses `user,item,rating` rows. A leading `user,item,rating` header is tolerated.
pub fn read_ratings<R: Read>(reader: R, users: Option<&IdMap>) -> Result<RatingsTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    let mut max_user: Option<NodeId> = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(i + 1, e.to_string()))?;
        let lineno = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(Error::parse(lineno, format!("expected 3 fields, found {}", rec.len())));
        }
        if i == 0 && rec[2].parse::<f64>().is_err() && &rec[0] == "user" {
            continue;
        }
        let user = resolve_node(&rec[0], users).map_err(|e| Error::parse(lineno, e.to_string()))?;
        let value: f64 = rec[2]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::parse(lineno, format!("invalid rating {:?}", &rec[2])))?;
        max_user = max_user.max(Some(user));
        rows.push((user, rec[1].to_owned(), value));
    }
    let num_users = match users {
        Some(map) => map.len(),
        None => max_user.map_or(0, |m| m as usize + 1),
    };
    RatingsTable::from_triples(num_users, rows.iter().map(|(u, i, v)| (*u, i.as_str(), *v)))
}

/// Latent vectors keyed by external id (user or item label).
#[derive(Clone, Debug, Default)]
pub struct EmbeddingSet {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingSet {
    pub fn new(dim: usize) -> Self {
        EmbeddingSet {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, v.len()));
        }
        linalg::check_finite(&v)?;
        self.vectors.insert(id.into(), v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn require(&self, id: &str) -> Result<&[f64]> {
        self.get(id).ok_or_else(|| Error::MissingVector(id.to_owned()))
    }

    /// Vector of graph node `u`, looked up by its external label.
    pub fn node_vector(&self, u: NodeId, ids: Option<&IdMap>) -> Result<&[f64]> {
        self.require(&node_label(u, ids))
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    read_embeddings(BufReader::new(File::open(path)?))
}

/// Parses `id<TAB>f1<TAB>...<TAB>fd` lines; the first data line fixes `d`.
pub fn read_embeddings<R: BufRead>(reader: R) -> Result<EmbeddingSet> {
    let mut set: Option<EmbeddingSet> = None;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or_default().trim();
        let v = fields
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(lineno, format!("invalid component: {e}")))?;
        if v.is_empty() {
            return Err(Error::parse(lineno, "embedding has no components"));
        }
        let set = set.get_or_insert_with(|| EmbeddingSet::new(v.len()));
        set.insert(id, v).map_err(|e| Error::parse(lineno, e.to_string()))?;
    }
    Ok(set.unwrap_or_default())
}

/// Builds the user similarity graph: both directions of `(u, v)` whenever the
/// Jaccard similarity of their rated-item sets strictly exceeds `threshold`.
/// Edge weights are a placeholder `1.0`, to be replaced by a later weighting step.
pub fn build_jaccard_graph(ratings: &RatingsTable, threshold: f64) -> Result<Graph> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "Jaccard threshold must lie in (0, 1], got {threshold}"
        )));
    }
    let sets = ratings.item_sets();
    let mut raters = vec![Vec::new(); ratings.num_items()];
    for (u, items) in sets.iter().enumerate() {
        for &i in items {
            raters[i as usize].push(u as NodeId);
        }
    }

    let n = ratings.num_users();
    let mut shared = vec![0u32; n];
    let mut touched = Vec::new();
    let mut edges = Vec::new();
    for (u, items) in sets.iter().enumerate() {
        for &i in items {
            for &v in &raters[i as usize] {
                if v as usize <= u {
                    continue;
                }
                if shared[v as usize] == 0 {
                    touched.push(v);
                }
                shared[v as usize] += 1;
            }
        }
        for &v in &touched {
            let inter = shared[v as usize] as usize;
            let union = items.len() + sets[v as usize].len() - inter;
            if inter as f64 / union as f64 > threshold {
                edges.push(Edge::new(u as NodeId, v, 1.0));
                edges.push(Edge::new(v, u as NodeId, 1.0));
            }
            shared[v as usize] = 0;
        }
        touched.clear();
    }
    Graph::new(n, edges)
}

/// How a cosine similarity in `[-1, 1]` becomes an activation probability.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CosineWeight {
    /// `max(0, cos)`
    #[default]
    Clamp,
    /// `(1 + cos) / 2`
    Affine,
}

impl CosineWeight {
    fn apply(self, cos: f64) -> f64 {
        match self {
            CosineWeight::Clamp => cos.max(0.0),
            CosineWeight::Affine => (1.0 + cos) / 2.0,
        }
    }
}

/// Re-weights every edge `(u, v)` from the cosine similarity of the endpoint
/// vectors. A zero-norm vector gives weight 0.
pub fn weights_from_embeddings(
    g: &Graph,
    users: &EmbeddingSet,
    ids: Option<&IdMap>,
    map: CosineWeight,
) -> Result<Graph> {
    for u in 0..g.n() as NodeId {
        users.node_vector(u, ids)?;
    }
    g.reweighted(|e| {
        let hu = users.node_vector(e.src, ids)?;
        let hv = users.node_vector(e.dst, ids)?;
        Ok(linalg::cosine(hu, hv)?.map_or(0.0, |c| map.apply(c)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_users(a: &[&str], b: &[&str]) -> RatingsTable {
        let rows = a
            .iter()
            .map(|i| (0, *i, 4.0))
            .chain(b.iter().map(|i| (1, *i, 3.0)));
        RatingsTable::from_triples(2, rows).unwrap()
    }

    #[test]
    fn jaccard_above_threshold_links_both_ways() {
        let r = two_users(&["i1", "i2", "i3"], &["i2", "i3", "i4"]);
        let g = build_jaccard_graph(&r, 0.2).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.weight(0, 1), Some(1.0));
        assert_eq!(g.weight(1, 0), Some(1.0));
    }

    #[test]
    fn jaccard_threshold_is_strict() {
        let r = two_users(&["i1", "i2", "i3"], &["i2", "i3", "i4"]);
        assert_eq!(build_jaccard_graph(&r, 0.5).unwrap().edge_count(), 0);
    }

    #[test]
    fn jaccard_disjoint_sets() {
        let r = two_users(&["i1"], &["i2"]);
        assert_eq!(build_jaccard_graph(&r, 0.01).unwrap().edge_count(), 0);
    }

    #[test]
    fn jaccard_rejects_bad_threshold() {
        let r = two_users(&["i1"], &["i1"]);
        assert!(build_jaccard_graph(&r, 0.0).is_err());
        assert!(build_jaccard_graph(&r, 1.1).is_err());
        assert_eq!(build_jaccard_graph(&r, 1.0).unwrap().edge_count(), 0);
    }

    fn embed(pairs: &[(&str, Vec<f64>)]) -> EmbeddingSet {
        let mut e = EmbeddingSet::new(pairs[0].1.len());
        for (id, v) in pairs {
            e.insert(*id, v.clone()).unwrap();
        }
        e
    }

    fn cosine_weight(hu: Vec<f64>, hv: Vec<f64>, map: CosineWeight) -> f64 {
        let g = Graph::new(2, vec![Edge::new(0, 1, 1.0)]).unwrap();
        let users = embed(&[("0", hu), ("1", hv)]);
        weights_from_embeddings(&g, &users, None, map)
            .unwrap()
            .weight(0, 1)
            .unwrap()
    }

    #[test]
    fn cosine_weights() {
        assert_eq!(cosine_weight(vec![1.0, 0.0], vec![1.0, 0.0], CosineWeight::Clamp), 1.0);
        assert_eq!(cosine_weight(vec![1.0, 0.0], vec![-1.0, 0.0], CosineWeight::Clamp), 0.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let w = cosine_weight(vec![1.0, 0.0], vec![s, s], CosineWeight::Clamp);
        assert!((w - 0.707_106_781_186_547_5).abs() < 1e-12);
        assert_eq!(cosine_weight(vec![1.0, 0.0], vec![-1.0, 0.0], CosineWeight::Affine), 0.0);
        assert_eq!(cosine_weight(vec![0.0, 0.0], vec![1.0, 0.0], CosineWeight::Clamp), 0.0);
    }

    #[test]
    fn missing_vector_is_an_error() {
        let g = Graph::new(2, vec![Edge::new(0, 1, 1.0)]).unwrap();
        let users = embed(&[("0", vec![1.0])]);
        let err = weights_from_embeddings(&g, &users, None, CosineWeight::Clamp).unwrap_err();
        assert!(matches!(err, Error::MissingVector(id) if id == "1"));
    }

    #[test]
    fn ratings_csv_with_header_and_normalization() {
        let text = "user,item,rating\n0,a,1\n1,a,3\n# comment\n1,b,5\n";
        let r = read_ratings(text.as_bytes(), None).unwrap();
        assert_eq!(r.entries().len(), 3);
        assert_eq!(r.num_users(), 2);
        assert_eq!(r.num_items(), 2);
        assert!(r.check_range(0.0, 5.0).is_ok());
        assert!(r.check_range(0.0, 4.0).is_err());
        let norm: Vec<f64> = r.normalized(0.0, 5.0).values().collect();
        assert_eq!(norm, vec![0.0, 2.5, 5.0]);
        let err = read_ratings("0,a,x\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn embeddings_tsv() {
        let e = read_embeddings("# users\nu1\t1\t0\nu2\t0.5\t0.5\n".as_bytes()).unwrap();
        assert_eq!(e.dim(), 2);
        assert_eq!(e.get("u2"), Some(&[0.5, 0.5][..]));
        assert!(read_embeddings("u1\t1\t0\nu2\t1\n".as_bytes()).is_err());
        assert!(read_embeddings("u1\tNaN\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn jaccard_graph_is_symmetric(
            rows in proptest::collection::vec((0u32..8, 0u8..6), 1..40),
            threshold in 0.05f64..=1.0,
        ) {
            let labels: Vec<String> = rows.iter().map(|(_, i)| format!("i{i}")).collect();
            let table = RatingsTable::from_triples(
                8,
                rows.iter().zip(&labels).map(|((u, _), l)| (*u, l.as_str(), 1.0)),
            ).unwrap();
            let g = build_jaccard_graph(&table, threshold).unwrap();
            for e in g.edges() {
                prop_assert_eq!(g.weight(e.dst, e.src), Some(e.weight));
            }
        }

        #[test]
        fn embedding_weights_are_probabilities(
            vs in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 3), 4),
            affine in any::<bool>(),
        ) {
            let edges = vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0), Edge::new(2, 3, 1.0), Edge::new(3, 0, 1.0)];
            let g = Graph::new(4, edges).unwrap();
            let mut users = EmbeddingSet::new(3);
            for (i, v) in vs.into_iter().enumerate() {
                users.insert(i.to_string(), v).unwrap();
            }
            let map = if affine { CosineWeight::Affine } else { CosineWeight::Clamp };
            let w = weights_from_embeddings(&g, &users, None, map).unwrap();
            for e in w.edges() {
                prop_assert!((0.0..=1.0).contains(&e.weight));
            }
        }
    }
}
