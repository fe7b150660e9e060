"""Quick end-to-end check of the extension module."""

import json

import textclass_py as tc

POS = ["a wonderful film with great acting", "great story and a superb cast", "loved it, wonderful and moving"]
NEG = ["a terrible film with awful acting", "boring story and a dreadful cast", "hated it, awful and dull"]


def main():
    assert tc.tokenize("It's <br/>great!") == ["It's", "great"]
    assert tc.stem("running") == "run"
    assert tc.stem("is") == "is"

    docs = [tc.preprocess_text(t) for t in POS + NEG]
    labels = [1] * len(POS) + [0] * len(NEG)

    vec = tc.Vectorizer("tfidf", min_df=1)
    vec.fit(docs)
    rows = vec.transform(docs)
    assert len(rows) == len(docs) and vec.dim == len(vec.vocabulary())

    for kind in ["multinomial_nb", "linear_svm", "logistic_regression", "knn", "decision_tree", "random_forest"]:
        params = {"k": 1} if kind == "knn" else None
        clf = tc.Classifier(kind, seed=7, params=params)
        clf.fit(rows, labels, vec.dim)
        pred = clf.predict(rows)
        scores = tc.evaluate(labels, pred)
        again = tc.Classifier.from_json(clf.to_json())
        assert again.predict(rows) == pred
        print(f"{kind:20s} train accuracy {scores['accuracy']:.2f}")

    try:
        tc.Classifier("knn", params={"bogus": 1})
    except ValueError:
        pass
    else:
        raise AssertionError("unknown hyperparameter accepted")

    print(json.dumps(tc.evaluate([0, 1, 1, 0], [0, 1, 0, 0])))
    print("ok")


if __name__ == "__main__":
    main()
