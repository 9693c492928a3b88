//! Immutable in-memory knowledge graph.
//!
//! Entities and relations are interned into dense, disjoint id spaces in
//! first-seen order. The triple set is duplicate-free and indexed per
//! relation; domain and range sets are computed once at construction and
//! shared read-only afterwards.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// Dense index into the entity interner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct EntityId(pub u32);

/// Dense index into the relation interner. Disjoint from [`EntityId`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct RelationId(pub u32);

/// An ordered (head, relation, tail) assertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub rel: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, rel: RelationId, tail: EntityId) -> Self {
        Triple { head, rel, tail }
    }
}

#[derive(Debug, Default, Clone)]
struct Interner {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }

    fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    fn len(&self) -> usize {
        self.names.len()
    }
}

/// Builder used by [`KnowledgeGraph::load_tsv`] and by tests that assemble
/// graphs programmatically. Duplicate triples collapse silently.
#[derive(Debug, Default)]
pub struct KnowledgeGraphBuilder {
    entities: Interner,
    relations: Interner,
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
}

impl KnowledgeGraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, head: &str, rel: &str, tail: &str) {
        let h = EntityId(self.entities.intern(head));
        let r = RelationId(self.relations.intern(rel));
        let t = EntityId(self.entities.intern(tail));
        let triple = Triple::new(h, r, t);
        if self.seen.insert(triple) {
            self.triples.push(triple);
        }
    }

    pub fn build(self) -> Result<KnowledgeGraph> {
        if self.triples.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let rel_count = self.relations.len();
        let mut by_relation: Vec<Vec<(EntityId, EntityId)>> = vec![Vec::new(); rel_count];
        for t in &self.triples {
            by_relation[t.rel.0 as usize].push((t.head, t.tail));
        }
        let mut domains = Vec::with_capacity(rel_count);
        let mut ranges = Vec::with_capacity(rel_count);
        for pairs in &by_relation {
            let mut dom: Vec<EntityId> = pairs.iter().map(|&(h, _)| h).collect();
            let mut rng: Vec<EntityId> = pairs.iter().map(|&(_, t)| t).collect();
            dom.sort_unstable();
            dom.dedup();
            rng.sort_unstable();
            rng.dedup();
            domains.push(dom);
            ranges.push(rng);
        }
        Ok(KnowledgeGraph {
            entities: self.entities,
            relations: self.relations,
            triples: self.triples,
            triple_set: self.seen,
            by_relation,
            domains,
            ranges,
        })
    }
}

/// Immutable knowledge graph: interned vocabulary, duplicate-free triple set,
/// per-relation pair index, and cached domain/range sets.
///
/// Safe to share read-only across parallel workers.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    entities: Interner,
    relations: Interner,
    triples: Vec<Triple>,
    triple_set: HashSet<Triple>,
    by_relation: Vec<Vec<(EntityId, EntityId)>>,
    /// Sorted, deduplicated head entities per relation.
    domains: Vec<Vec<EntityId>>,
    /// Sorted, deduplicated tail entities per relation.
    ranges: Vec<Vec<EntityId>>,
}

impl KnowledgeGraph {
    /// Load and merge one or more TSV triple files (head TAB relation TAB
    /// tail, one triple per line). Duplicates across files collapse into a
    /// single positive set.
    pub fn load_tsv<P: AsRef<Path>>(paths: &[P]) -> Result<KnowledgeGraph> {
        let mut builder = KnowledgeGraphBuilder::new();
        for path in paths {
            let path = path.as_ref();
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                let mut fields = line.split('\t');
                let (head, rel, tail) = match (fields.next(), fields.next(), fields.next()) {
                    (Some(h), Some(r), Some(t)) if fields.next().is_none() => (h, r, t),
                    _ => {
                        return Err(Error::MalformedLine {
                            path: path.to_owned(),
                            line: idx + 1,
                            found: line.split('\t').count(),
                        })
                    }
                };
                builder.add(head, rel, tail);
            }
        }
        builder.build()
    }

    /// Load a ConvE-layout directory: any of train.txt / valid.txt / test.txt
    /// merged into one positive set. A plain file path is loaded directly.
    pub fn load_dir(input: &Path) -> Result<KnowledgeGraph> {
        if input.is_dir() {
            let mut paths: Vec<PathBuf> = ["train.txt", "valid.txt", "test.txt"]
                .iter()
                .map(|f| input.join(f))
                .filter(|p| p.is_file())
                .collect();
            if paths.is_empty() {
                return Err(Error::io(
                    input,
                    std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        "no train.txt/valid.txt/test.txt in directory",
                    ),
                ));
            }
            paths.sort();
            KnowledgeGraph::load_tsv(&paths)
        } else {
            KnowledgeGraph::load_tsv(&[input])
        }
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    /// All triples in first-seen order.
    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// Membership test against the positive set. O(1) expected.
    pub fn contains(&self, t: &Triple) -> bool {
        self.triple_set.contains(t)
    }

    pub fn contains_hrt(&self, head: EntityId, rel: RelationId, tail: EntityId) -> bool {
        self.contains(&Triple::new(head, rel, tail))
    }

    /// (head, tail) pairs asserted for `r`, in first-seen order.
    pub fn pairs_of(&self, r: RelationId) -> Result<&[(EntityId, EntityId)]> {
        self.by_relation
            .get(r.0 as usize)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownRelation(r.0))
    }

    /// Sorted set of head entities of `r`.
    pub fn domain_of(&self, r: RelationId) -> Result<&[EntityId]> {
        self.domains
            .get(r.0 as usize)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownRelation(r.0))
    }

    /// Sorted set of tail entities of `r`.
    pub fn range_of(&self, r: RelationId) -> Result<&[EntityId]> {
        self.ranges
            .get(r.0 as usize)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownRelation(r.0))
    }

    pub fn relation_ids(&self) -> impl Iterator<Item = RelationId> {
        (0..self.relations.len() as u32).map(RelationId)
    }

    pub fn entity_ids(&self) -> impl Iterator<Item = EntityId> {
        (0..self.entities.len() as u32).map(EntityId)
    }

    pub fn entity_name(&self, e: EntityId) -> Result<&str> {
        self.entities
            .names
            .get(e.0 as usize)
            .map(String::as_str)
            .ok_or(Error::UnknownEntity(e.0))
    }

    pub fn relation_name(&self, r: RelationId) -> Result<&str> {
        self.relations
            .names
            .get(r.0 as usize)
            .map(String::as_str)
            .ok_or(Error::UnknownRelation(r.0))
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entities.get(name).map(EntityId)
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relations.get(name).map(RelationId)
    }

    /// Write the triple set back out as TSV, in first-seen order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for t in &self.triples {
            writeln!(
                out,
                "{}\t{}\t{}",
                self.entities.names[t.head.0 as usize],
                self.relations.names[t.rel.0 as usize],
                self.entities.names[t.tail.0 as usize]
            )?;
        }
        Ok(())
    }

    /// Global counts as a JSON value, the payload of `kg stats`.
    pub fn stats_json(&self) -> serde_json::Value {
        serde_json::json!({
            "entities": self.entity_count(),
            "relations": self.relation_count(),
            "triples": self.triple_count(),
        })
    }
}

impl fmt::Display for KnowledgeGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "KnowledgeGraph({} entities, {} relations, {} triples)",
            self.entity_count(),
            self.relation_count(),
            self.triple_count()
        )
    }
}

/// Serialize a triple list as TSV using the graph's interners.
pub fn write_triples_tsv<W: Write>(
    kg: &KnowledgeGraph,
    triples: &[Triple],
    mut out: W,
) -> Result<()> {
    for t in triples {
        writeln!(
            out,
            "{}\t{}\t{}",
            kg.entity_name(t.head)?,
            kg.relation_name(t.rel)?,
            kg.entity_name(t.tail)?
        )
        .map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}
