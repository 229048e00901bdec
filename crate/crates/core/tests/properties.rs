mod common;

use proptest::prelude::*;
use slopeone_core::eval::all_but_one_mae;
use slopeone_core::{
    Dataset, DeviationStores, Evaluation, ItemId, Model, RatingChange, RatingScale, SchemeId, UserId,
};

use common::{Ratings, RawData};

fn ratings(max_items: u32) -> impl Strategy<Value = Ratings> {
    prop::collection::btree_map(0..max_items, (1u8..=5).prop_map(f64::from), 1..=max_items as usize)
}

fn raw_data(max_users: usize, max_items: u32) -> impl Strategy<Value = RawData> {
    prop::collection::vec(ratings(max_items), 1..=max_users).prop_map(|users| RawData {
        users: users.into_iter().enumerate().map(|(u, r)| (u as u32, r)).collect(),
    })
}

#[derive(Clone, Debug)]
enum Op {
    Add(u32, u32, f64),
    Remove(usize),
    Update(usize, f64),
}

fn ops() -> impl Strategy<Value = Vec<Op>> {
    let value = (1u8..=9).prop_map(|v| 0.5 + f64::from(v) * 0.5);
    prop::collection::vec(
        prop_oneof![
            (0u32..5, 0u32..6, value.clone()).prop_map(|(u, i, v)| Op::Add(u, i, v)),
            any::<prop::sample::Index>().prop_map(|ix| Op::Remove(ix.index(1 << 16))),
            (any::<prop::sample::Index>(), value).prop_map(|(ix, v)| Op::Update(ix.index(1 << 16), v)),
        ],
        0..40,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn incremental_stores_equal_batch_build(start in raw_data(4, 6), ops in ops()) {
        let scale = RatingScale::new(1.0, 5.0, 0.5).unwrap();
        let mut dataset = start.to_dataset(scale);
        let mut stores = DeviationStores::build(&dataset);
        for op in ops {
            let rated: Vec<(UserId, ItemId)> = dataset
                .evaluations()
                .flat_map(|e| e.items().map(move |i| (e.user(), i)))
                .collect();
            let (user, item, change) = match op {
                Op::Add(u, i, v) => (UserId(u), ItemId(i), RatingChange::Add(v)),
                Op::Remove(k) if !rated.is_empty() => {
                    let (u, i) = rated[k % rated.len()];
                    (u, i, RatingChange::Remove)
                }
                Op::Update(k, v) if !rated.is_empty() => {
                    let (u, i) = rated[k % rated.len()];
                    (u, i, RatingChange::Update(v))
                }
                _ => continue,
            };
            let before = (dataset.clone(), stores.clone());
            match stores.apply_rating_change(&mut dataset, user, item, change) {
                Ok(_) => {}
                Err(_) => {
                    // Rejected edits leave everything untouched.
                    prop_assert_eq!(&before.0, &dataset);
                    prop_assert_eq!(&before.1, &stores);
                }
            }
        }
        let batch = DeviationStores::build(&dataset);
        prop_assert!(stores.approx_eq(&batch, 1e-9));
        prop_assert_eq!(stores.plain.items(), batch.plain.items());
    }

    #[test]
    fn polar_counts_bounded_by_plain(data in raw_data(6, 6)) {
        let stores = DeviationStores::build(&data.to_dataset(RatingScale::movielens()));
        for i in 0..6 {
            for j in 0..6 {
                if i == j {
                    continue;
                }
                let (a, b) = (ItemId(i), ItemId(j));
                let plain = stores.plain.deviation(a, b).1;
                let like = stores.bipolar.like_deviation(a, b).1;
                let dislike = stores.bipolar.dislike_deviation(a, b).1;
                prop_assert!(like + dislike <= plain);
            }
        }
    }

    #[test]
    fn slope_one_depends_only_on_mean_and_rated_items(
        data in raw_data(5, 6),
        query in ratings(6).prop_filter("two ratings", |r| r.len() >= 2),
        shift in 0.1f64..2.0,
    ) {
        let model = Model::train(data.to_dataset(RatingScale::new(-10.0, 20.0, 0.1).unwrap()));
        let mut moved = query.clone();
        let keys: Vec<u32> = moved.keys().copied().take(2).collect();
        *moved.get_mut(&keys[0]).unwrap() += shift;
        *moved.get_mut(&keys[1]).unwrap() -= shift;
        let targets: Vec<ItemId> = (0..6).map(ItemId).collect();
        let a = model.predict(SchemeId::SlopeOne, &common::to_evaluation(9, &query), &targets).unwrap();
        let b = model.predict(SchemeId::SlopeOne, &common::to_evaluation(9, &moved), &targets).unwrap();
        for &t in &targets {
            prop_assert!((a.value(t).unwrap() - b.value(t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_equals_plain_average_when_counts_equal(
        // Every user rates every item, so all pair counts are equal.
        rows in prop::collection::vec(prop::collection::vec((1u8..=5).prop_map(f64::from), 5), 1..5),
        query in ratings(5),
        target in 0u32..5,
    ) {
        let data = RawData {
            users: rows
                .into_iter()
                .enumerate()
                .map(|(u, r)| (u as u32, r.into_iter().enumerate().map(|(i, v)| (i as u32, v)).collect()))
                .collect(),
        };
        let model = Model::train(data.to_dataset(RatingScale::new(-10.0, 20.0, 1.0).unwrap()));
        let q = common::to_evaluation(9, &query);
        let got = model.predict(SchemeId::WeightedSlopeOne, &q, &[ItemId(target)]).unwrap();
        if let Some(want) = common::slope_one_unsimplified(&data, &query, target) {
            prop_assert!((got.value(ItemId(target)).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn clamping_never_increases_mae(
        test in prop::collection::vec(ratings(6), 1..5),
        offset in -8.0f64..8.0,
    ) {
        let scale = RatingScale::movielens();
        let evals: Vec<Evaluation> =
            test.iter().enumerate().map(|(u, r)| common::to_evaluation(u as u32, r)).collect();
        let predictor = move |q: &Evaluation, _: ItemId| q.mean() + offset;
        if evals.iter().all(|e| e.len() < 2) {
            return Ok(());
        }
        let clamped = all_but_one_mae(&predictor, &evals, scale, 1.0).unwrap().raw_mae;
        let mut total = 0.0;
        let mut users = 0;
        for e in evals.iter().filter(|e| e.len() >= 2) {
            let err: f64 = e
                .ratings()
                .iter()
                .map(|&(i, truth)| (predictor(&e.without(i).unwrap(), i) - truth).abs())
                .sum();
            total += err / e.len() as f64;
            users += 1;
        }
        prop_assert!(clamped <= total / users as f64 + 1e-12);
    }

    #[test]
    fn evaluation_leaves_training_state_untouched(
        train in raw_data(5, 6),
        test in prop::collection::vec(ratings(6), 1..4),
    ) {
        let dataset = train.to_dataset(RatingScale::movielens());
        let snapshot = dataset.clone();
        let stores = DeviationStores::build(&dataset);
        let test: Vec<Evaluation> =
            test.iter().enumerate().map(|(u, r)| common::to_evaluation(50 + u as u32, r)).collect();
        let _ = slopeone_core::eval::compare_schemes(
            &SchemeId::ALL,
            &dataset,
            &test,
            4.0,
            Default::default(),
            0,
        );
        prop_assert_eq!(&dataset, &snapshot);
        prop_assert_eq!(&DeviationStores::build(&dataset), &stores);
        prop_assert_eq!(dataset.item_index(), &dataset.rebuild_item_index());
    }
}

#[test]
fn dataset_from_oracle_types_is_consistent() {
    let data =
        RawData { users: [(0, Ratings::from([(1, 1.0), (2, 2.0)])), (1, Ratings::from([(2, 3.0)]))].into() };
    let d: Dataset = data.to_dataset(RatingScale::movielens());
    assert_eq!(d.num_ratings(), 3);
    assert_eq!(data.items(), vec![1, 2]);
}
