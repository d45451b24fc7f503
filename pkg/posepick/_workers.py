import logging
import multiprocessing

logger = logging.getLogger(__name__)


def ordered_map(func, items, workers=1):
    """
    ``[func(item) for item in items]``, spread over ``workers`` processes
    when ``workers > 1``. Results keep the input order, so they do not
    depend on the number of workers. ``func`` must be picklable.
    """
    items = list(items)
    workers = int(workers)
    if workers < 1:
        raise ValueError('workers must be >= 1, got %d' % (workers,))
    if workers == 1 or len(items) < 2:
        return [func(item) for item in items]

    workers = min(workers, len(items))
    chunksize = max(1, len(items) // (4 * workers))
    logger.debug('mapping %d items over %d workers', len(items), workers)
    with multiprocessing.Pool(workers) as pool:
        return pool.map(func, items, chunksize)
