"""Naive reference evaluators used to cross-check the library.

Everything here is written with explicit Python loops and math functions,
sharing no code with the package: cosine from dot products and norms, loss
denominators materialized term by term, metrics by exhaustive counting.
"""

import math


def cos(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    return dot / (na * nb)


def naive_in_batch_loss(anchors, positives, tau):
    """mean_i -log( e^{cos(h_i, p_i)/tau} / sum_j e^{cos(h_i, p_j)/tau} )"""
    n = len(anchors)
    total = 0.0
    for i in range(n):
        numerator = math.exp(cos(anchors[i], positives[i]) / tau)
        denominator = sum(math.exp(cos(anchors[i], positives[j]) / tau) for j in range(n))
        total += -math.log(numerator / denominator)
    return total / n


def naive_hard_negative_loss(anchors, positives, negatives, tau):
    """Denominator holds both the positive and negative term of every j."""
    n = len(anchors)
    total = 0.0
    for i in range(n):
        numerator = math.exp(cos(anchors[i], positives[i]) / tau)
        denominator = 0.0
        for j in range(n):
            denominator += math.exp(cos(anchors[i], positives[j]) / tau)
            denominator += math.exp(cos(anchors[i], negatives[j]) / tau)
        total += -math.log(numerator / denominator)
    return total / n


def naive_moco_loss(anchors, positives, negatives, queue, tau):
    """Base loss with every queue entry as one extra denominator term."""
    n = len(anchors)
    total = 0.0
    for i in range(n):
        numerator = math.exp(cos(anchors[i], positives[i]) / tau)
        denominator = 0.0
        for j in range(n):
            denominator += math.exp(cos(anchors[i], positives[j]) / tau)
            if negatives is not None:
                denominator += math.exp(cos(anchors[i], negatives[j]) / tau)
        for q in queue:
            denominator += math.exp(cos(anchors[i], q) / tau)
        total += -math.log(numerator / denominator)
    return total / n


def pairwise_auc(scores, labels):
    """Exhaustive positive/negative comparison; ties count one half."""
    positives = [s for s, y in zip(scores, labels) if y == 1]
    negatives = [s for s, y in zip(scores, labels) if y == 0]
    wins = 0.0
    for p in positives:
        for q in negatives:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(positives) * len(negatives))


def confusion_f1(predictions, labels):
    tp = sum(1 for p, y in zip(predictions, labels) if p == 1 and y == 1)
    fp = sum(1 for p, y in zip(predictions, labels) if p == 1 and y == 0)
    fn = sum(1 for p, y in zip(predictions, labels) if p == 0 and y == 1)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def sort_precision_at_k(scores, labels, k):
    """Sort (score desc, input order) and count positives among the top k."""
    ranked = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return sum(labels[i] for i in ranked[:k]) / k


def finite_difference_grads(f, arrays, step=1e-5):
    """Central finite differences of scalar f w.r.t. a list of arrays."""
    grads = []
    for arr in arrays:
        grad = arr * 0.0
        flat = arr.reshape(-1)
        grad_flat = grad.reshape(-1)
        for idx in range(flat.shape[0]):
            original = flat[idx]
            flat[idx] = original + step
            up = f()
            flat[idx] = original - step
            down = f()
            flat[idx] = original
            grad_flat[idx] = (up - down) / (2 * step)
        grads.append(grad)
    return grads
