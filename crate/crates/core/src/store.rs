//! In-memory review and behavior stores with the lookups graph expansion
//! needs. Lookups return ids in ascending order so every consumer is
//! deterministic.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::Result;
use crate::model::{validate_behavior, BehaviorRecord, Endpoint, EntityRef, EntityType, Relation, Review};

#[derive(Debug, Default, Clone)]
pub struct ReviewStore {
    reviews: HashMap<String, Review>,
}

impl ReviewStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces; returns the previous value.
    pub fn insert(&mut self, review: Review) -> Result<Option<Review>> {
        review.validate()?;
        Ok(self.reviews.insert(review.review_id.clone(), review))
    }

    pub fn get(&self, review_id: &str) -> Option<&Review> {
        self.reviews.get(review_id)
    }

    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Review> {
        self.reviews.values()
    }
}

type Links = HashMap<String, BTreeSet<String>>;

fn link(map: &mut Links, from: &str, to: &str) -> bool {
    map.entry(from.to_string()).or_default().insert(to.to_string())
}

fn linked<'a>(map: &'a Links, key: &str) -> impl Iterator<Item = &'a String> + 'a {
    map.get(key).into_iter().flatten()
}

/// Behavioral relations indexed in both directions.
///
/// `posted` and `attached_to` links can also be derived from a review's own
/// `user_id` and `item_id` via [`BehaviorStore::add_review_links`].
#[derive(Debug, Default, Clone)]
pub struct BehaviorStore {
    records: BTreeSet<BehaviorRecord>,
    authors_of_review: Links,
    reviews_by_user: Links,
    items_of_review: Links,
    reviews_by_item: Links,
    devices_by_user: Links,
    users_by_device: Links,
    ips_by_user: Links,
    users_by_ip: Links,
}

impl BehaviorStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validates and indexes a record; returns false for an exact duplicate.
    pub fn add(&mut self, b: BehaviorRecord) -> Result<bool> {
        validate_behavior(&b)?;
        match (&b.subject, b.relation, &b.object) {
            (Endpoint::Entity(u), Relation::Posted, Endpoint::Review(r)) => {
                link(&mut self.authors_of_review, r, &u.entity_id);
                link(&mut self.reviews_by_user, &u.entity_id, r);
            }
            (Endpoint::Entity(u), Relation::LoggedInFrom, Endpoint::Entity(d)) => {
                link(&mut self.devices_by_user, &u.entity_id, &d.entity_id);
                link(&mut self.users_by_device, &d.entity_id, &u.entity_id);
            }
            (Endpoint::Entity(u), Relation::ConnectedVia, Endpoint::Entity(ip)) => {
                link(&mut self.ips_by_user, &u.entity_id, &ip.entity_id);
                link(&mut self.users_by_ip, &ip.entity_id, &u.entity_id);
            }
            (Endpoint::Review(r), Relation::AttachedTo, Endpoint::Entity(i)) => {
                link(&mut self.items_of_review, r, &i.entity_id);
                link(&mut self.reviews_by_item, &i.entity_id, r);
            }
            _ => unreachable!("validate_behavior admits only the four shapes above"),
        }
        Ok(self.records.insert(b))
    }

    /// Records the `posted` and `attached_to` links implied by the review.
    pub fn add_review_links(&mut self, review: &Review) -> Result<()> {
        self.add(BehaviorRecord::posted(
            &review.user_id,
            &review.review_id,
            review.created_at,
        ))?;
        self.add(BehaviorRecord::attached_to(
            &review.review_id,
            &review.item_id,
            review.created_at,
        ))?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &BehaviorRecord> {
        self.records.iter()
    }

    pub fn authors(&self, review_id: &str) -> impl Iterator<Item = &String> {
        linked(&self.authors_of_review, review_id)
    }

    pub fn items(&self, review_id: &str) -> impl Iterator<Item = &String> {
        linked(&self.items_of_review, review_id)
    }

    pub fn devices_of(&self, user: &str) -> impl Iterator<Item = &String> {
        linked(&self.devices_by_user, user)
    }

    pub fn ips_of(&self, user: &str) -> impl Iterator<Item = &String> {
        linked(&self.ips_by_user, user)
    }

    /// Entities one behavioral hop from a review: its authors and items,
    /// plus the devices and IPs those authors used. Each comes with the
    /// relation that links it and, for device/IP, the author in between.
    pub fn entities_of_review(&self, review_id: &str) -> Vec<(EntityRef, Relation, Option<String>)> {
        let mut out = Vec::new();
        for user in self.authors(review_id) {
            out.push((EntityRef::user(user.clone()), Relation::Posted, None));
            for d in self.devices_of(user) {
                out.push((EntityRef::device(d.clone()), Relation::LoggedInFrom, Some(user.clone())));
            }
            for ip in self.ips_of(user) {
                out.push((EntityRef::ip(ip.clone()), Relation::ConnectedVia, Some(user.clone())));
            }
        }
        for item in self.items(review_id) {
            out.push((EntityRef::item(item.clone()), Relation::AttachedTo, None));
        }
        out
    }

    /// Reviews linked to an entity, with the relation used for the RE edge.
    /// A device or IP links to every review posted by a user seen on it.
    pub fn reviews_of_entity(&self, entity: &EntityRef) -> BTreeMap<String, Relation> {
        let mut out = BTreeMap::new();
        let id = entity.entity_id.as_str();
        match entity.entity_type {
            EntityType::User => {
                for r in linked(&self.reviews_by_user, id) {
                    out.insert(r.clone(), Relation::Posted);
                }
            }
            EntityType::Item => {
                for r in linked(&self.reviews_by_item, id) {
                    out.insert(r.clone(), Relation::AttachedTo);
                }
            }
            EntityType::Device | EntityType::Ip => {
                let (users, relation) = if entity.entity_type == EntityType::Device {
                    (&self.users_by_device, Relation::LoggedInFrom)
                } else {
                    (&self.users_by_ip, Relation::ConnectedVia)
                };
                for u in linked(users, id) {
                    for r in linked(&self.reviews_by_user, u) {
                        out.insert(r.clone(), relation);
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn device_links_reach_reviews_of_every_user_on_it() {
        let mut s = BehaviorStore::new();
        for (u, r) in [("u1", "r1"), ("u2", "r2"), ("u3", "r3")] {
            s.add(BehaviorRecord::posted(u, r, 0)).unwrap();
        }
        s.add(BehaviorRecord::logged_in_from("u1", "d1", 0)).unwrap();
        s.add(BehaviorRecord::logged_in_from("u2", "d1", 0)).unwrap();
        let got = s.reviews_of_entity(&EntityRef::device("d1"));
        assert_eq!(got.keys().collect::<Vec<_>>(), ["r1", "r2"]);
        assert!(got.values().all(|r| *r == Relation::LoggedInFrom));

        let ents = s.entities_of_review("r1");
        assert!(ents.contains(&(EntityRef::device("d1"), Relation::LoggedInFrom, Some("u1".into()))));
        assert!(ents.contains(&(EntityRef::user("u1"), Relation::Posted, None)));
    }

    #[test]
    fn duplicates_are_reported() {
        let mut s = BehaviorStore::new();
        assert!(s.add(BehaviorRecord::attached_to("r1", "i1", 0)).unwrap());
        assert!(!s.add(BehaviorRecord::attached_to("r1", "i1", 0)).unwrap());
        assert_eq!(s.len(), 1);
        assert!(s.add(BehaviorRecord::attached_to("r1", "", 0)).is_err());
    }
}
