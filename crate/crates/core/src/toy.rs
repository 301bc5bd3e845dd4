//! Synthetic datasets with planted community structure, for tests and demos.
//!
//! Users rate items, tag items, and befriend other users. Each user, item and tag
//! belongs to one community, and users prefer their community's items, tags and friends.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ToyParams {
    pub users: usize,
    pub items: usize,
    pub tags: usize,
    pub communities: usize,
    pub ratings_per_user: usize,
    pub tags_per_user: usize,
    pub friends_per_user: usize,
    /// Probability that a choice stays inside the user's community.
    pub affinity: f64,
    /// Adds a numeric `age` user attribute joined to users through an `aged` relationship.
    pub with_age: bool,
    pub seed: u64,
}

impl Default for ToyParams {
    fn default() -> Self {
        ToyParams {
            users: 30,
            items: 40,
            tags: 8,
            communities: 2,
            ratings_per_user: 8,
            tags_per_user: 3,
            friends_per_user: 2,
            affinity: 0.8,
            with_age: false,
            seed: 7,
        }
    }
}

/// In-memory CSV texts and schema JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyDataset {
    pub schema_json: String,
    /// `(file name, contents)`.
    pub files: Vec<(String, String)>,
}

/// Paths of a toy dataset written to disk.
#[derive(Debug, Clone)]
pub struct ToyPaths {
    pub schema: PathBuf,
    pub data_dir: PathBuf,
}

fn pick(rng: &mut ChaCha8Rng, n: usize, community: usize, communities: usize, affinity: f64) -> usize {
    if rng.random_bool(affinity) {
        // members of a community are the indices congruent to it
        let members = (n + communities - 1 - community) / communities;
        community + communities * rng.random_range(0..members.max(1))
    } else {
        rng.random_range(0..n)
    }
}

impl ToyParams {
    fn validate(&self) -> Result<()> {
        let ok = self.users >= 2
            && self.items > self.communities
            && self.tags >= self.communities
            && self.communities >= 1
            && self.ratings_per_user <= self.items
            && (0.0..=1.0).contains(&self.affinity);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("inconsistent toy parameters {self:?}")))
        }
    }

    pub fn generate(&self) -> Result<ToyDataset> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let c = self.communities;
        let mut ratings = String::from("user,item,rating\n");
        let mut tagging = String::from("user,item,tag\n");
        let mut friends = String::from("user,friend\n");
        let mut users = String::from("user,age\n");
        for u in 0..self.users {
            let community = u % c;
            let mut items = BTreeSet::new();
            while items.len() < self.ratings_per_user {
                items.insert(pick(&mut rng, self.items, community, c, self.affinity));
            }
            for &i in &items {
                let base = if i % c == community { 4 } else { 2 };
                let rating = base + rng.random_range(0..2);
                writeln!(ratings, "u{u},i{i},{rating}").unwrap();
            }
            let rated: Vec<usize> = items.into_iter().collect();
            let mut tagged = BTreeSet::new();
            for _ in 0..self.tags_per_user {
                let i = rated[rng.random_range(0..rated.len())];
                let t = pick(&mut rng, self.tags, community, c, self.affinity);
                tagged.insert((i, t));
            }
            for (i, t) in tagged {
                writeln!(tagging, "u{u},i{i},t{t}").unwrap();
            }
            let mut fr = BTreeSet::new();
            for _ in 0..self.friends_per_user {
                let f = pick(&mut rng, self.users, community, c, self.affinity);
                if f != u {
                    fr.insert(f);
                }
            }
            for f in fr {
                writeln!(friends, "u{u},u{f}").unwrap();
            }
            let age = 18 + 10 * community + rng.random_range(0..15);
            writeln!(users, "u{u},{age}").unwrap();
        }
        let mut files = vec![
            ("ratings.csv".to_string(), ratings),
            ("tags.csv".to_string(), tagging),
            ("friends.csv".to_string(), friends),
        ];
        if self.with_age {
            files.push(("users.csv".to_string(), users));
        }
        Ok(ToyDataset {
            schema_json: toy_schema(self.with_age),
            files,
        })
    }

    /// Writes `schema.json` and the CSV files into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<ToyPaths> {
        let dir = dir.as_ref();
        let data = self.generate()?;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let schema = dir.join("schema.json");
        std::fs::write(&schema, &data.schema_json).map_err(|e| Error::io(&schema, e))?;
        for (name, text) in &data.files {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(ToyPaths {
            schema,
            data_dir: dir.to_path_buf(),
        })
    }
}

fn toy_schema(with_age: bool) -> String {
    let (users_table, aged) = if with_age {
        (
            r#",
    {"name": "users", "file": "users.csv", "columns": [
      {"name": "user", "role": "source_id"},
      {"name": "age", "role": "feature", "kind": "numeric",
       "binning": {"strategy": "quantile", "bins": 4}}]}"#,
            r#",
    {"name": "aged", "table": "users", "source_entity": "user", "target_entity": "age"}"#,
        )
    } else {
        ("", "")
    };
    format!(
        r#"{{
  "tables": [
    {{"name": "ratings", "file": "ratings.csv", "columns": [
      {{"name": "user", "role": "source_id"}},
      {{"name": "item", "role": "target_id"}},
      {{"name": "rating", "role": "feedback"}}]}},
    {{"name": "tags", "file": "tags.csv", "columns": [
      {{"name": "user", "role": "source_id"}},
      {{"name": "item", "role": "target_id"}},
      {{"name": "tag", "role": "feature"}}]}},
    {{"name": "friends", "file": "friends.csv", "columns": [
      {{"name": "user", "role": "source_id"}},
      {{"name": "friend", "role": "source_id", "entity": "user"}}]}}{users_table}
  ],
  "relationships": [
    {{"name": "rates", "table": "ratings", "source_entity": "user", "target_entity": "item"}},
    {{"name": "uses", "table": "tags", "source_entity": "user", "target_entity": "tag"}},
    {{"name": "used", "table": "tags", "source_entity": "tag", "target_entity": "item"}},
    {{"name": "friends", "table": "friends", "source_entity": "user", "target_entity": "user"}}{aged}
  ],
  "predicted": "rates"
}}
"#
    )
}
