import logging

from django.db import DatabaseError, models
from django.utils import timezone

logger = logging.getLogger(__name__)


class ExperimentRun(models.Model):
    COMMAND_CHOICES = [
        ('fit', 'fit'),
        ('evaluate', 'evaluate'),
        ('grid', 'grid'),
        ('transform', 'transform'),
    ]

    STATUS_CHOICES = [
        ('running', 'running'),
        ('succeeded', 'succeeded'),
        ('failed', 'failed'),
    ]

    command = models.CharField(max_length=20, choices=COMMAND_CHOICES)
    config_text = models.TextField(blank=True, help_text="verbatim config echo")
    seed = models.BigIntegerField(default=0)
    output_dir = models.CharField(max_length=500)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='running')
    error = models.TextField(blank=True)
    summary = models.JSONField(default=dict, blank=True)
    wallclock = models.FloatField(null=True, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.command} seed={self.seed} ({self.status})"

    @classmethod
    def begin(cls, command, config_text, seed, output_dir):
        """Best effort: a missing table must not fail the numerical run."""
        try:
            return cls.objects.create(command=command, config_text=config_text, seed=seed, output_dir=str(output_dir))
        except DatabaseError as e:
            logger.warning(f"run ledger unavailable (did you run migrate?): {e}")
            return None

    def finish(self, status, summary=None, error='', wallclock=None):
        self.status = status
        self.summary = summary or {}
        self.error = error
        self.wallclock = wallclock
        self.finished_at = timezone.now()
        try:
            self.save()
        except DatabaseError as e:
            logger.warning(f"failed to update run {self.pk}: {e}")


class EvaluationCache(models.Model):
    """
    Evaluation reports keyed by a digest of dataset, mode, hyper-parameters and split.
    Runs are deterministic, so a hit equals a recomputation.
    """
    key = models.CharField(max_length=64, unique=True)
    report = models.JSONField()
    created_at = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        return f"Cache: {self.key[:12]}"


class ReportCache:
    """get/put adapter over ``EvaluationCache`` used by the grid search."""

    def __init__(self, report_class):
        self.report_class = report_class
        self.hits = 0
        self.misses = 0

    def get(self, key):
        try:
            entry = EvaluationCache.objects.filter(key=key).first()
        except DatabaseError as e:
            logger.warning(f"evaluation cache unavailable: {e}")
            return None
        if entry is None:
            self.misses += 1
            logger.info(f"Cache MISS for {key[:12]}")
            return None
        self.hits += 1
        logger.info(f"Cache HIT for {key[:12]}")
        return self.report_class.from_dict(entry.report)

    def put(self, key, report):
        try:
            EvaluationCache.objects.update_or_create(key=key, defaults={'report': report.as_dict()})
        except DatabaseError as e:
            logger.warning(f"failed to cache evaluation {key[:12]}: {e}")
