use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{Edge, Graph, IdMap, NodeId};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct EdgeListOptions {
    /// Node count to use instead of `max id + 1`; ids must stay below it.
    pub declared_n: Option<usize>,
    /// Each line describes an undirected pair and yields both directions.
    pub undirected: bool,
    /// Treat ids as opaque labels and renumber them densely.
    pub remap_ids: bool,
}

#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// Present when ids were remapped.
    pub ids: Option<IdMap>,
}

pub fn load_edge_list(path: impl AsRef<Path>, opts: &EdgeListOptions) -> Result<LoadedGraph> {
    read_edge_list(BufReader::new(File::open(path)?), opts)
}

/// Parses `src<TAB>dst<TAB>weight` lines; `#` lines and blank lines are skipped.
pub fn read_edge_list<R: BufRead>(reader: R, opts: &EdgeListOptions) -> Result<LoadedGraph> {
    let mut ids = opts.remap_ids.then(IdMap::new);
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    let mut max_id: Option<NodeId> = None;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let mut node = |tok: &str| -> Result<NodeId> {
            match ids.as_mut() {
                Some(map) => Ok(map.get_or_insert(tok)),
                None => tok
                    .parse::<NodeId>()
                    .map_err(|_| Error::parse(lineno, format!("invalid node id {tok:?}"))),
            }
        };
        let src = node(fields[0])?;
        let dst = node(fields[1])?;
        let weight: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid weight {:?}", fields[2])))?;
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::parse(lineno, "weight out of range"));
        }
        if src == dst {
            return Err(Error::parse(lineno, "self-loop"));
        }
        if let Some(n) = opts.declared_n {
            if src as usize >= n || dst as usize >= n {
                return Err(Error::parse(lineno, format!("node id exceeds declared n = {n}")));
            }
        }
        let pairs: &[(NodeId, NodeId)] = if opts.undirected {
            &[(src, dst), (dst, src)]
        } else {
            &[(src, dst)]
        };
        for &(u, v) in pairs {
            if !seen.insert((u, v)) {
                return Err(Error::parse(lineno, format!("duplicate edge {u} -> {v}")));
            }
            edges.push(Edge::new(u, v, weight));
        }
        max_id = max_id.max(Some(src.max(dst)));
    }

    let inferred = match (&ids, max_id) {
        (Some(map), _) => map.len(),
        (None, Some(m)) => m as usize + 1,
        (None, None) => 0,
    };
    let n = opts.declared_n.unwrap_or(0).max(inferred);
    Ok(LoadedGraph {
        graph: Graph::new(n, edges)?,
        ids,
    })
}

/// Writes one line per edge in canonical order, weights in shortest round-trip form.
pub fn write_edge_list<W: Write>(g: &Graph, ids: Option<&IdMap>, mut w: W) -> Result<()> {
    writeln!(w, "# nodes {} edges {}", g.n(), g.edge_count())?;
    for e in g.edges() {
        match ids {
            Some(map) => writeln!(w, "{}\t{}\t{}", map.label(e.src), map.label(e.dst), e.weight)?,
            None => writeln!(w, "{}\t{}\t{}", e.src, e.dst, e.weight)?,
        }
    }
    Ok(())
}
